#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "instsupp/corpus.hpp"
#include "instsupp/features.hpp"
#include "instsupp/lasso.hpp"
#include "instsupp/metrics.hpp"

namespace instsupp {

/// Teacher -> fold assignment. Every teacher is in exactly one fold.
struct FoldPlan {
  int k = 5;
  std::uint64_t seed = 0;
  std::map<std::string, int> assignments;

  int fold_of(const std::string& teacher_id) const;
  std::vector<std::string> teachers_in(int fold) const;
};

/// Stratified teacher-disjoint folds. Teachers with at least one session
/// labeled for `dimension` are shuffled with `seed`, stably sorted by mean
/// session target, and dealt into folds in serpentine order
/// (0, 1, ..., k-1, k-1, ..., 0, 0, 1, ...).
FoldPlan make_folds(const Corpus& corpus, Dimension dimension, int k = 5,
                    std::uint64_t seed = 0);

struct FoldMetrics {
  int fold = 0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  std::optional<double> r;
  double rmse = 0.0;
  std::optional<double> spearman;
  std::optional<double> qwk;
  std::vector<std::string> notes;
};

struct CvReport {
  std::string feature_mode;
  Dimension dimension = Dimension::Domain;
  Protocol protocol = Protocol::PreK;
  int k = 5;
  std::uint64_t seed = 0;
  double lambda = 0.1;
  bool non_negative = false;
  std::size_t n_sessions = 0;
  /// Sessions without a label for the dimension.
  std::size_t n_excluded = 0;
  std::vector<FoldMetrics> per_fold;
  metrics::Summary r;
  metrics::Summary rmse;
  metrics::Summary spearman;
  metrics::Summary qwk;
};

struct CvOptions {
  LassoOptions<double> lasso;
  int k = 5;
  std::uint64_t seed = 0;
};

struct Prediction {
  std::string session_id;
  int fold = 0;
  double y_hat = 0.0;
  double target = 0.0;
};

struct CvRun {
  CvReport report;
  FoldPlan plan;
  /// Model trained for each fold, indexed by fold.
  std::vector<RegressionModel> models;
  std::vector<Prediction> predictions;
};

/// For each fold: fit the featurizer (vocabulary), standardizer and lasso
/// on the training teachers only, then score the held-out teachers.
CvRun cross_validate(const Corpus& corpus, const FeatureConfig& features, Dimension dimension,
                     const CvOptions& options);

struct LabelerAgreement {
  std::string labeler_id;
  std::size_t n_sessions = 0;
  std::optional<double> r;
  double rmse = 0.0;
};

struct IrrReport {
  Dimension dimension = Dimension::Domain;
  std::vector<LabelerAgreement> per_labeler;
  std::vector<std::string> notes;
  metrics::Summary r;
  metrics::Summary rmse;
};

/// Leave-one-labeler-out agreement: each labeler against the mean of the
/// other labelers on the sessions they share.
IrrReport inter_rater_reliability(const Corpus& corpus, Dimension dimension);

nlohmann::json to_json(const CvReport& report);
nlohmann::json to_json(const IrrReport& report);

/// Plain-text table, one row per feature mode (plus an optional human IRR
/// row) and an "R" and "RMSE" column per dimension, cells "mean (se)".
std::string render_table(const std::vector<CvReport>& reports,
                         const std::vector<IrrReport>& irr, Protocol protocol);

}  // namespace instsupp
