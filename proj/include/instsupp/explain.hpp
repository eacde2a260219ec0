#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "instsupp/aggregate.hpp"
#include "instsupp/corpus.hpp"
#include "instsupp/lasso.hpp"

namespace instsupp {

struct Contribution {
  std::string feature;
  double value = 0.0;
};

/// How much one utterance adds to the session prediction: (w/s)^T x.
struct MarginalScore {
  std::size_t utterance_index = 0;
  double delta_y = 0.0;
  /// Nonzero (w/s)_j * x_j terms in feature order.
  std::vector<Contribution> contributions;
};

std::vector<MarginalScore> marginal_scores(const RegressionModel& model,
                                           const SessionFeatures& features);

struct Decomposition {
  double sum_of_deltas = 0.0;
  /// b - (w/s)^T m
  double offset = 0.0;
  double y_hat = 0.0;
};

Decomposition decompose(const RegressionModel& model, const SessionFeatures& features);

struct TopBottom {
  std::vector<MarginalScore> top;     // highest first
  std::vector<MarginalScore> bottom;  // lowest first
  std::string note;
};

/// k highest and k lowest utterances, ties by utterance index. When the
/// session has fewer than 2k utterances the lists are shortened so they
/// stay disjoint and `note` says so.
TopBottom top_bottom(const std::vector<MarginalScore>& marginals, std::size_t k = 4);

/// Sorts by delta_y ascending and takes positions floor(i * n / count).
/// Returns utterance indices in that sorted order.
std::vector<std::size_t> sample_spanning(const std::vector<MarginalScore>& marginals,
                                         std::size_t count = 100);

nlohmann::json explanation_json(const Session& session, const RegressionModel& model,
                                const SessionFeatures& features);

/// Plain-text digest of the k most and least supportive utterances.
std::string explanation_digest(const Session& session, const RegressionModel& model,
                               const SessionFeatures& features, std::size_t k = 4);

}  // namespace instsupp
