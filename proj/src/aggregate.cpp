#include "instsupp/aggregate.hpp"

namespace instsupp {

SessionFeatures make_session_features(std::string session_id,
                                      std::vector<std::string> feature_names,
                                      Eigen::MatrixXd per_utterance) {
  if (per_utterance.cols() != static_cast<Eigen::Index>(feature_names.size()))
    throw DimensionMismatch(fmt::format("{}: {} feature columns but {} names", session_id,
                                        per_utterance.cols(), feature_names.size()));
  SessionFeatures f;
  f.session_id = std::move(session_id);
  f.feature_names = std::move(feature_names);
  f.g = sum_features(per_utterance);
  f.per_utterance = std::move(per_utterance);
  return f;
}

SessionFeatures concat(const SessionFeatures& a, const SessionFeatures& b) {
  if (a.feature_names.empty()) return b;
  if (b.feature_names.empty()) return a;
  if (a.per_utterance.rows() != b.per_utterance.rows())
    throw DimensionMismatch(fmt::format("concat: {} has {} utterances in one family, {} in the other",
                                        a.session_id, a.per_utterance.rows(),
                                        b.per_utterance.rows()));
  Eigen::MatrixXd rows(a.per_utterance.rows(), a.per_utterance.cols() + b.per_utterance.cols());
  rows << a.per_utterance, b.per_utterance;
  auto names = a.feature_names;
  names.insert(names.end(), b.feature_names.begin(), b.feature_names.end());
  return make_session_features(a.session_id, std::move(names), std::move(rows));
}

}  // namespace instsupp
