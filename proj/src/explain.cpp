#include "instsupp/explain.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/format.h>

#include "instsupp/errors.hpp"

namespace instsupp {

using nlohmann::json;

namespace {

void check_space(const RegressionModel& model, const SessionFeatures& features) {
  if (features.per_utterance.cols() != model.w.size() ||
      features.feature_names != model.feature_names)
    throw DimensionMismatch(
        fmt::format("{}: feature space ({} columns) does not match the model ({})",
                    features.session_id, features.per_utterance.cols(), model.w.size()));
}

bool by_delta_then_index(const MarginalScore& a, const MarginalScore& b) {
  return a.delta_y != b.delta_y ? a.delta_y < b.delta_y
                                : a.utterance_index < b.utterance_index;
}

}  // namespace

std::vector<MarginalScore> marginal_scores(const RegressionModel& model,
                                           const SessionFeatures& features) {
  check_space(model, features);
  const Eigen::VectorXd ws = standardized_weights(model);
  std::vector<MarginalScore> out;
  out.reserve(static_cast<std::size_t>(features.per_utterance.rows()));
  for (Eigen::Index i = 0; i < features.per_utterance.rows(); ++i) {
    MarginalScore m;
    m.utterance_index = static_cast<std::size_t>(i);
    for (Eigen::Index j = 0; j < ws.size(); ++j) {
      const double v = ws(j) * features.per_utterance(i, j);
      if (v == 0.0) continue;
      m.delta_y += v;
      m.contributions.push_back({model.feature_names[static_cast<std::size_t>(j)], v});
    }
    out.push_back(std::move(m));
  }
  return out;
}

Decomposition decompose(const RegressionModel& model, const SessionFeatures& features) {
  Decomposition d;
  for (const auto& m : marginal_scores(model, features)) d.sum_of_deltas += m.delta_y;
  d.offset = model.b - standardized_weights(model).dot(model.standardizer.mean);
  d.y_hat = d.sum_of_deltas + d.offset;
  return d;
}

TopBottom top_bottom(const std::vector<MarginalScore>& marginals, std::size_t k) {
  TopBottom out;
  const std::size_t n = marginals.size();
  std::size_t k_top = k;
  std::size_t k_bottom = k;
  if (n < 2 * k) {
    k_top = std::min(k, (n + 1) / 2);
    k_bottom = std::min(k, n - k_top);
    out.note = fmt::format("only {} utterances; showing {} top and {} bottom", n, k_top,
                           k_bottom);
  }
  auto ascending = marginals;
  std::sort(ascending.begin(), ascending.end(), by_delta_then_index);
  auto descending = marginals;
  std::sort(descending.begin(), descending.end(), [](const auto& a, const auto& b) {
    return a.delta_y != b.delta_y ? a.delta_y > b.delta_y
                                  : a.utterance_index < b.utterance_index;
  });
  out.top.assign(descending.begin(), descending.begin() + static_cast<std::ptrdiff_t>(k_top));
  for (const auto& m : ascending) {
    if (out.bottom.size() == k_bottom) break;
    bool in_top = std::any_of(out.top.begin(), out.top.end(), [&](const auto& t) {
      return t.utterance_index == m.utterance_index;
    });
    if (!in_top) out.bottom.push_back(m);
  }
  return out;
}

std::vector<std::size_t> sample_spanning(const std::vector<MarginalScore>& marginals,
                                         std::size_t count) {
  const std::size_t n = marginals.size();
  if (count == 0) throw ValidationError("sample_spanning: count must be positive");
  if (n < count)
    throw ValidationError(fmt::format(
        "sample_spanning: {} utterances cannot supply {} samples; use a count <= {}", n,
        count, n));
  auto sorted = marginals;
  std::sort(sorted.begin(), sorted.end(), by_delta_then_index);
  std::vector<std::size_t> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(sorted[i * n / count].utterance_index);
  // floor((count-1) n / count) falls short of n-1 once n > count; pin the
  // last pick so the sample always reaches the maximum.
  out.back() = sorted.back().utterance_index;
  return out;
}

json explanation_json(const Session& session, const RegressionModel& model,
                      const SessionFeatures& features) {
  auto marginals = marginal_scores(model, features);
  auto d = decompose(model, features);
  json utts = json::array();
  for (const auto& m : marginals) {
    const auto& u = session.utterances.at(m.utterance_index);
    json contribs = json::array();
    for (const auto& c : m.contributions)
      contribs.push_back({{"feature", c.feature}, {"value", c.value}});
    utts.push_back({{"index", m.utterance_index},
                    {"text", u.text},
                    {"start_s", u.start_s},
                    {"delta_y", m.delta_y},
                    {"contributions", std::move(contribs)}});
  }
  return {{"session_id", session.session_id},
          {"y_hat", d.y_hat},
          {"offset", d.offset},
          {"utterances", std::move(utts)}};
}

std::string explanation_digest(const Session& session, const RegressionModel& model,
                               const SessionFeatures& features, std::size_t k) {
  auto marginals = marginal_scores(model, features);
  auto d = decompose(model, features);
  auto tb = top_bottom(marginals, k);

  auto line = [&](const MarginalScore& m) {
    const auto& u = session.utterances.at(m.utterance_index);
    std::string s = fmt::format("  [{:>4}] {:>7.1f}s  {:+.4f}  {}\n", m.utterance_index,
                                u.start_s, m.delta_y, u.text);
    for (const auto& c : m.contributions)
      s += fmt::format("           {:+.4f}  \"{}\"\n", c.value, c.feature);
    return s;
  };

  std::string out = fmt::format("session {} ({}): predicted {:.3f} = {:.3f} utterance sum + {:.3f} offset\n",
                                session.session_id, model.dimension, d.y_hat,
                                d.sum_of_deltas, d.offset);
  if (!tb.note.empty()) out += "note: " + tb.note + "\n";
  out += fmt::format("highest {}:\n", tb.top.size());
  for (const auto& m : tb.top) out += line(m);
  out += fmt::format("lowest {}:\n", tb.bottom.size());
  for (const auto& m : tb.bottom) out += line(m);
  return out;
}

}  // namespace instsupp
