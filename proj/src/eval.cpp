#include "instsupp/eval.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include <fmt/format.h>

#include "instsupp/errors.hpp"

namespace instsupp {

using nlohmann::json;

namespace metrics {

Summary summarize(const std::vector<std::optional<double>>& values) {
  Summary s;
  std::vector<double> defined;
  for (const auto& v : values) {
    if (v) defined.push_back(*v);
    else ++s.n_undefined;
  }
  s.n_defined = defined.size();
  if (defined.empty()) return s;
  double sum = 0.0;
  for (double v : defined) sum += v;
  const double mean = sum / static_cast<double>(defined.size());
  s.mean = mean;
  if (defined.size() >= 2) {
    double ss = 0.0;
    for (double v : defined) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(defined.size() - 1));
    s.se = sd / std::sqrt(static_cast<double>(defined.size()));
  }
  return s;
}

}  // namespace metrics

int FoldPlan::fold_of(const std::string& teacher_id) const {
  auto it = assignments.find(teacher_id);
  return it == assignments.end() ? -1 : it->second;
}

std::vector<std::string> FoldPlan::teachers_in(int fold) const {
  std::vector<std::string> out;
  for (const auto& [t, f] : assignments)
    if (f == fold) out.push_back(t);
  return out;
}

FoldPlan make_folds(const Corpus& corpus, Dimension dimension, int k, std::uint64_t seed) {
  if (k < 2) throw ValidationError("make_folds: k must be at least 2");
  std::map<std::string, std::pair<double, std::size_t>> sums;
  for (const auto& s : corpus.sessions) {
    auto target = try_mean_target(s, dimension);
    if (!target) continue;
    auto& acc = sums[s.teacher_id];
    acc.first += *target;
    ++acc.second;
  }
  if (sums.size() < static_cast<std::size_t>(k))
    throw ValidationError(fmt::format("make_folds: {} labeled teachers for {} folds",
                                      sums.size(), k));

  std::vector<std::pair<std::string, double>> teachers;
  for (const auto& [id, acc] : sums)
    teachers.emplace_back(id, acc.first / static_cast<double>(acc.second));
  std::mt19937_64 rng(seed);
  std::shuffle(teachers.begin(), teachers.end(), rng);
  std::stable_sort(teachers.begin(), teachers.end(),
                   [](const auto& a, const auto& b) { return a.second < b.second; });

  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  for (std::size_t i = 0; i < teachers.size(); ++i) {
    const auto round = i / static_cast<std::size_t>(k);
    const auto pos = static_cast<int>(i % static_cast<std::size_t>(k));
    plan.assignments[teachers[i].first] = round % 2 == 0 ? pos : k - 1 - pos;
  }
  return plan;
}

CvRun cross_validate(const Corpus& corpus, const FeatureConfig& features, Dimension dimension,
                     const CvOptions& options) {
  CvRun run;
  run.plan = make_folds(corpus, dimension, options.k, options.seed);

  auto& report = run.report;
  report.feature_mode = feature_mode_name(features);
  report.dimension = dimension;
  report.protocol = corpus.protocol;
  report.k = options.k;
  report.seed = options.seed;
  report.lambda = options.lasso.lambda;
  report.non_negative = options.lasso.non_negative;

  struct Labeled {
    const Session* session;
    double target;
    int fold;
  };
  std::vector<Labeled> labeled;
  for (const auto& s : corpus.sessions) {
    auto target = try_mean_target(s, dimension);
    if (!target) {
      ++report.n_excluded;
      continue;
    }
    labeled.push_back({&s, *target, run.plan.fold_of(s.teacher_id)});
  }
  report.n_sessions = labeled.size();
  const auto range = score_range(dimension);

  std::vector<std::optional<double>> rs, rmses, rhos, kappas;
  for (int fold = 0; fold < options.k; ++fold) {
    std::vector<const Session*> train;
    std::vector<const Labeled*> test;
    for (const auto& l : labeled) {
      if (l.fold == fold) test.push_back(&l);
      else train.push_back(l.session);
    }
    if (test.empty() || train.size() < 2)
      throw ValidationError(fmt::format("fold {}: {} train / {} test sessions", fold,
                                        train.size(), test.size()));

    auto featurizer = fit_featurizer(features, train);
    const auto d = static_cast<Eigen::Index>(featurizer.feature_names().size());
    Eigen::MatrixXd g_train(static_cast<Eigen::Index>(train.size()), d);
    Eigen::VectorXd y_train(static_cast<Eigen::Index>(train.size()));
    Eigen::Index row = 0;
    for (const auto& l : labeled) {
      if (l.fold == fold) continue;
      g_train.row(row) = featurizer(*l.session).g.transpose();
      y_train(row) = l.target;
      ++row;
    }

    auto model = train_model(g_train, y_train, featurizer.feature_names(), options.lasso);
    model.protocol = to_string(corpus.protocol);
    model.feature_mode = report.feature_mode;
    model.dimension = to_string(dimension);

    Eigen::VectorXd y_hat(static_cast<Eigen::Index>(test.size()));
    Eigen::VectorXd y_true(static_cast<Eigen::Index>(test.size()));
    for (std::size_t i = 0; i < test.size(); ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      y_hat(ii) = predict(model, featurizer(*test[i]->session).g);
      y_true(ii) = test[i]->target;
      run.predictions.push_back({test[i]->session->session_id, fold, y_hat(ii), y_true(ii)});
    }

    FoldMetrics fm;
    fm.fold = fold;
    fm.n_train = train.size();
    fm.n_test = test.size();
    fm.rmse = metrics::rmse(y_hat, y_true);
    if (test.size() >= 2) {
      fm.r = metrics::pearson(y_hat, y_true);
      fm.spearman = metrics::spearman(y_hat, y_true);
      auto q = metrics::qwk(y_hat, y_true, range.lo, range.hi);
      fm.qwk = q.kappa;
      if (q.constant_prediction)
        fm.notes.push_back("constant predictions mapped to the range midpoint for kappa");
    }
    if (!fm.r) fm.notes.push_back("Pearson R undefined (constant predictions or targets)");
    if (!model.converged) fm.notes.push_back("lasso hit the sweep cap before converging");
    rs.push_back(fm.r);
    rmses.push_back(fm.rmse);
    rhos.push_back(fm.spearman);
    kappas.push_back(fm.qwk);
    report.per_fold.push_back(std::move(fm));
    run.models.push_back(std::move(model));
  }

  report.r = metrics::summarize(rs);
  report.rmse = metrics::summarize(rmses);
  report.spearman = metrics::summarize(rhos);
  report.qwk = metrics::summarize(kappas);
  return run;
}

IrrReport inter_rater_reliability(const Corpus& corpus, Dimension dimension) {
  IrrReport report;
  report.dimension = dimension;
  // session -> labeler -> score
  std::map<std::string, std::map<std::string, double>> scores;
  std::set<std::string> labelers;
  for (const auto& s : corpus.sessions)
    for (const auto& rec : s.labels)
      if (rec.dimension == dimension) {
        scores[s.session_id][rec.labeler_id] = rec.score;
        labelers.insert(rec.labeler_id);
      }
  if (labelers.size() < 2)
    throw ValidationError(fmt::format("irr: {} labeler(s) for {}; need at least 2",
                                      labelers.size(), to_string(dimension)));

  std::vector<std::optional<double>> rs, rmses;
  for (const auto& labeler : labelers) {
    std::vector<double> own, others;
    for (const auto& [sid, by_labeler] : scores) {
      auto it = by_labeler.find(labeler);
      if (it == by_labeler.end() || by_labeler.size() < 2) continue;
      double sum = 0.0;
      for (const auto& [other, score] : by_labeler)
        if (other != labeler) sum += score;
      own.push_back(it->second);
      others.push_back(sum / static_cast<double>(by_labeler.size() - 1));
    }
    if (own.size() < 2) {
      report.notes.push_back(fmt::format("labeler {} excluded: {} shared session(s)", labeler,
                                         own.size()));
      continue;
    }
    Eigen::Map<const Eigen::VectorXd> a(own.data(), static_cast<Eigen::Index>(own.size()));
    Eigen::Map<const Eigen::VectorXd> b(others.data(), static_cast<Eigen::Index>(others.size()));
    LabelerAgreement agreement{labeler, own.size(), metrics::pearson(a, b), metrics::rmse(a, b)};
    if (!agreement.r)
      report.notes.push_back(fmt::format("labeler {}: Pearson R undefined", labeler));
    rs.push_back(agreement.r);
    rmses.push_back(agreement.rmse);
    report.per_labeler.push_back(std::move(agreement));
  }
  report.r = metrics::summarize(rs);
  report.rmse = metrics::summarize(rmses);
  return report;
}

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json summary_json(const metrics::Summary& s) {
  return {{"mean", opt(s.mean)},
          {"se", opt(s.se)},
          {"n_defined", s.n_defined},
          {"n_undefined", s.n_undefined}};
}

std::string cell(const metrics::Summary& s) {
  if (!s.mean) return "undef";
  if (!s.se) return fmt::format("{:.2f} (-)", *s.mean);
  return fmt::format("{:.2f} ({:.2f})", *s.mean, *s.se);
}

}  // namespace

json to_json(const CvReport& report) {
  json folds = json::array();
  for (const auto& f : report.per_fold)
    folds.push_back({{"fold", f.fold},
                     {"n_train", f.n_train},
                     {"n_test", f.n_test},
                     {"R", opt(f.r)},
                     {"RMSE", f.rmse},
                     {"spearman", opt(f.spearman)},
                     {"qwk", opt(f.qwk)},
                     {"notes", f.notes}});
  return {{"feature_mode", report.feature_mode},
          {"dimension", to_string(report.dimension)},
          {"protocol", to_string(report.protocol)},
          {"k", report.k},
          {"seed", report.seed},
          {"lambda", report.lambda},
          {"non_negative", report.non_negative},
          {"n_sessions", report.n_sessions},
          {"n_excluded", report.n_excluded},
          {"per_fold", std::move(folds)},
          {"summary",
           {{"R", summary_json(report.r)},
            {"RMSE", summary_json(report.rmse)},
            {"spearman", summary_json(report.spearman)},
            {"qwk", summary_json(report.qwk)}}}};
}

json to_json(const IrrReport& report) {
  json per = json::array();
  for (const auto& l : report.per_labeler)
    per.push_back({{"labeler_id", l.labeler_id},
                   {"n_sessions", l.n_sessions},
                   {"R", opt(l.r)},
                   {"RMSE", l.rmse}});
  return {{"dimension", to_string(report.dimension)},
          {"per_labeler", std::move(per)},
          {"notes", report.notes},
          {"summary", {{"R", summary_json(report.r)}, {"RMSE", summary_json(report.rmse)}}}};
}

std::string render_table(const std::vector<CvReport>& reports,
                         const std::vector<IrrReport>& irr, Protocol protocol) {
  std::vector<Dimension> dims;
  std::vector<std::string> rows;
  for (const auto& r : reports) {
    if (std::find(dims.begin(), dims.end(), r.dimension) == dims.end())
      dims.push_back(r.dimension);
    if (std::find(rows.begin(), rows.end(), r.feature_mode) == rows.end())
      rows.push_back(r.feature_mode);
  }
  for (const auto& r : irr)
    if (std::find(dims.begin(), dims.end(), r.dimension) == dims.end())
      dims.push_back(r.dimension);
  std::sort(dims.begin(), dims.end());

  constexpr int kFirst = 22;
  constexpr int kCell = 13;
  std::string out = fmt::format("{:<{}}", "", kFirst);
  for (auto d : dims) out += fmt::format("| {:<{}}", dimension_label(d, protocol), 2 * kCell + 1);
  out += "\n";
  out += fmt::format("{:<{}}", "Method", kFirst);
  for (std::size_t i = 0; i < dims.size(); ++i)
    out += fmt::format("| {:<{}} {:<{}}", "R", kCell, "RMSE", kCell);
  out += "\n";
  out += std::string(kFirst + dims.size() * (2 * kCell + 3), '-') + "\n";

  auto emit = [&](const std::string& name, auto&& lookup) {
    out += fmt::format("{:<{}}", name, kFirst);
    for (auto d : dims) {
      const auto* pair = lookup(d);
      if (pair)
        out += fmt::format("| {:<{}} {:<{}}", cell(pair->first), kCell, cell(pair->second), kCell);
      else
        out += fmt::format("| {:<{}} {:<{}}", "", kCell, "", kCell);
    }
    out += "\n";
  };

  if (!irr.empty()) {
    std::map<Dimension, std::pair<metrics::Summary, metrics::Summary>> cells;
    for (const auto& r : irr) cells[r.dimension] = {r.r, r.rmse};
    emit("Human IRR", [&](Dimension d) {
      auto it = cells.find(d);
      return it == cells.end() ? nullptr : &it->second;
    });
  }
  for (const auto& name : rows) {
    std::map<Dimension, std::pair<metrics::Summary, metrics::Summary>> cells;
    for (const auto& r : reports)
      if (r.feature_mode == name) cells[r.dimension] = {r.r, r.rmse};
    emit(name, [&](Dimension d) {
      auto it = cells.find(d);
      return it == cells.end() ? nullptr : &it->second;
    });
  }
  return out;
}

}  // namespace instsupp
