#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "instsupp/aggregate.hpp"
#include "instsupp/bow.hpp"
#include "instsupp/corpus.hpp"
#include "instsupp/llm.hpp"

namespace instsupp {

enum class FeatureKind {
  Bow,
  LlmAll,
  LlmDim,
  Concat,  // LLM(All) columns first, then BoW
  BaselineWords,
  BaselineQuestions,
  BaselineBoth,
};

enum class VocabScope { Fold, Corpus };

/// LLM rows for the protocol's full indicator set, keyed by session id.
struct LlmFeatureTable {
  llm::IndicatorSet set;
  std::map<std::string, Eigen::MatrixXd> rows;
};

/// Runs the featurizer over every session. Throws on the first session
/// whose requests fail.
LlmFeatureTable compute_llm_table(llm::ChatBackend& backend, const Corpus& corpus,
                                  const llm::FeaturizeOptions& options,
                                  llm::FeatureCache* cache = nullptr);

struct FeatureConfig {
  FeatureKind kind = FeatureKind::Bow;
  /// Indicator subset for FeatureKind::LlmDim.
  Dimension llm_dimension = Dimension::Dim1;
  std::size_t vocab_size = 300;
  VocabScope vocab_scope = VocabScope::Fold;
  /// Required by the LLM kinds.
  const LlmFeatureTable* llm = nullptr;
  /// Vocabulary used instead of a fold-local one when vocab_scope is Corpus.
  const bow::Vocabulary* corpus_vocab = nullptr;

  bool uses_llm() const;
  bool uses_bow() const;
};

/// bow | llm_all | llm_dim:<dim> | concat | baseline_words |
/// baseline_questions | baseline_both
FeatureConfig parse_feature_config(std::string_view mode);
std::string feature_mode_name(const FeatureConfig& config);

/// A feature map whose data-dependent parts (the vocabulary) have been
/// fitted on a set of training sessions.
class Featurizer {
 public:
  const std::vector<std::string>& feature_names() const { return names_; }
  const std::optional<bow::Vocabulary>& vocabulary() const { return vocab_; }

  SessionFeatures operator()(const Session& session) const;

  friend Featurizer fit_featurizer(const FeatureConfig& config,
                                   std::span<const Session* const> train);

 private:
  FeatureConfig config_;
  std::optional<bow::Vocabulary> vocab_;
  std::vector<Eigen::Index> llm_columns_;
  std::vector<std::string> names_;
};

Featurizer fit_featurizer(const FeatureConfig& config, std::span<const Session* const> train);

}  // namespace instsupp
