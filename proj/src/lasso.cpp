#include "instsupp/lasso.hpp"

#include <fstream>
#include <sstream>

namespace instsupp {

using nlohmann::json;

namespace {

constexpr std::size_t kTraceTail = 10;

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

RegressionModel train_model(const Eigen::MatrixXd& sessions, const Eigen::VectorXd& targets,
                            std::vector<std::string> feature_names,
                            const LassoOptions<double>& options) {
  if (sessions.cols() != static_cast<Eigen::Index>(feature_names.size()))
    throw DimensionMismatch(fmt::format("train_model: {} columns, {} feature names",
                                        sessions.cols(), feature_names.size()));
  RegressionModel model;
  model.feature_names = std::move(feature_names);
  model.standardizer = fit_standardizer(sessions);
  const Eigen::MatrixXd X = standardize_rows(sessions, model.standardizer);
  auto fit = fit_lasso(X, targets, options);
  model.w = std::move(fit.w);
  model.b = fit.b;
  model.lambda = options.lambda;
  model.non_negative = options.non_negative;
  model.objective_trace = std::move(fit.objective_trace);
  model.sweeps = fit.sweeps;
  model.converged = fit.converged;
  return model;
}

double predict(const RegressionModel& model, const Eigen::VectorXd& g_raw) {
  if (g_raw.size() != model.w.size())
    throw DimensionMismatch(fmt::format("predict: model has {} features, input {}",
                                        model.w.size(), g_raw.size()));
  return model.w.dot(standardize(g_raw, model.standardizer)) + model.b;
}

Eigen::VectorXd standardized_weights(const RegressionModel& model) {
  return (model.w.array() / model.standardizer.scale.array()).matrix();
}

json model_to_json(const RegressionModel& model) {
  std::vector<bool> mask(model.standardizer.masked.begin(), model.standardizer.masked.end());
  const auto& trace = model.objective_trace;
  std::vector<double> tail(trace.end() - static_cast<std::ptrdiff_t>(
                                             std::min(trace.size(), kTraceTail)),
                           trace.end());
  return {{"feature_names", model.feature_names},
          {"w", to_std(model.w)},
          {"b", model.b},
          {"lambda", model.lambda},
          {"non_negative", model.non_negative},
          {"m", to_std(model.standardizer.mean)},
          {"s", to_std(model.standardizer.scale)},
          {"mask", mask},
          {"n_train", model.standardizer.n_train},
          {"protocol", model.protocol},
          {"feature_mode", model.feature_mode},
          {"dimension", model.dimension},
          {"sweeps", model.sweeps},
          {"converged", model.converged},
          {"objective_trace_tail", tail}};
}

RegressionModel model_from_json(const json& doc) {
  RegressionModel m;
  try {
    m.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
    m.w = to_eigen(doc.at("w").get<std::vector<double>>());
    m.b = doc.at("b").get<double>();
    m.lambda = doc.at("lambda").get<double>();
    m.non_negative = doc.at("non_negative").get<bool>();
    m.standardizer.mean = to_eigen(doc.at("m").get<std::vector<double>>());
    m.standardizer.scale = to_eigen(doc.at("s").get<std::vector<double>>());
    auto mask = doc.at("mask").get<std::vector<bool>>();
    m.standardizer.masked.resize(static_cast<Eigen::Index>(mask.size()));
    for (std::size_t i = 0; i < mask.size(); ++i)
      m.standardizer.masked(static_cast<Eigen::Index>(i)) = mask[i];
    m.standardizer.n_train = doc.value("n_train", 0);
    m.protocol = doc.value("protocol", "");
    m.feature_mode = doc.value("feature_mode", "");
    m.dimension = doc.value("dimension", "");
    m.sweeps = doc.value("sweeps", 0);
    m.converged = doc.value("converged", false);
    m.objective_trace = doc.value("objective_trace_tail", std::vector<double>{});
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("bad model document: {}", e.what()), 0);
  }
  const auto d = m.w.size();
  if (static_cast<Eigen::Index>(m.feature_names.size()) != d || m.standardizer.mean.size() != d ||
      m.standardizer.scale.size() != d || m.standardizer.masked.size() != d)
    throw DimensionMismatch("model document: vector lengths disagree");
  return m;
}

void save_model(const RegressionModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  out << model_to_json(model).dump(1) << '\n';
}

RegressionModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open '{}'", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return model_from_json(json::parse(buf.str()));
  } catch (const json::parse_error& e) {
    throw ParseError(fmt::format("{}: malformed at byte {}", path.string(), e.byte), e.byte);
  }
}

}  // namespace instsupp
