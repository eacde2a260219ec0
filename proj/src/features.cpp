#include "instsupp/features.hpp"

#include <fmt/format.h>

#include "instsupp/errors.hpp"

namespace instsupp {

LlmFeatureTable compute_llm_table(llm::ChatBackend& backend, const Corpus& corpus,
                                  const llm::FeaturizeOptions& options,
                                  llm::FeatureCache* cache) {
  LlmFeatureTable table;
  table.set = llm::indicator_set(corpus.protocol);
  for (const auto& s : corpus.sessions)
    table.rows.emplace(s.session_id, llm::featurize_llm(backend, s, table.set, options, cache));
  return table;
}

bool FeatureConfig::uses_llm() const {
  return kind == FeatureKind::LlmAll || kind == FeatureKind::LlmDim ||
         kind == FeatureKind::Concat;
}

bool FeatureConfig::uses_bow() const {
  return kind == FeatureKind::Bow || kind == FeatureKind::Concat;
}

FeatureConfig parse_feature_config(std::string_view mode) {
  FeatureConfig c;
  if (mode == "bow") c.kind = FeatureKind::Bow;
  else if (mode == "llm_all") c.kind = FeatureKind::LlmAll;
  else if (mode == "concat") c.kind = FeatureKind::Concat;
  else if (mode == "baseline_words") c.kind = FeatureKind::BaselineWords;
  else if (mode == "baseline_questions") c.kind = FeatureKind::BaselineQuestions;
  else if (mode == "baseline_both") c.kind = FeatureKind::BaselineBoth;
  else if (mode.substr(0, 8) == "llm_dim:") {
    c.kind = FeatureKind::LlmDim;
    c.llm_dimension = parse_dimension(mode.substr(8));
    if (c.llm_dimension == Dimension::Domain)
      throw ValidationError("llm_dim needs dim1, dim2 or dim3; use llm_all for the domain");
  } else {
    throw ValidationError(fmt::format("unknown feature mode '{}'", mode));
  }
  return c;
}

std::string feature_mode_name(const FeatureConfig& config) {
  switch (config.kind) {
    case FeatureKind::Bow: return "bow";
    case FeatureKind::LlmAll: return "llm_all";
    case FeatureKind::LlmDim: return "llm_dim:" + to_string(config.llm_dimension);
    case FeatureKind::Concat: return "concat";
    case FeatureKind::BaselineWords: return "baseline_words";
    case FeatureKind::BaselineQuestions: return "baseline_questions";
    case FeatureKind::BaselineBoth: return "baseline_both";
  }
  return "?";
}

namespace {

bow::BaselineMode baseline_mode(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::BaselineWords: return bow::BaselineMode::Words;
    case FeatureKind::BaselineQuestions: return bow::BaselineMode::Questions;
    default: return bow::BaselineMode::Both;
  }
}

bool is_baseline(FeatureKind kind) {
  return kind == FeatureKind::BaselineWords || kind == FeatureKind::BaselineQuestions ||
         kind == FeatureKind::BaselineBoth;
}

}  // namespace

Featurizer fit_featurizer(const FeatureConfig& config, std::span<const Session* const> train) {
  Featurizer f;
  f.config_ = config;
  if (config.uses_llm()) {
    if (!config.llm) throw ValidationError("LLM feature mode without an LLM feature table");
    auto set = config.kind == FeatureKind::LlmDim
                   ? llm::subset(config.llm->set, config.llm_dimension)
                   : config.llm->set;
    for (auto src : set.source_index) f.llm_columns_.push_back(static_cast<Eigen::Index>(src));
    f.names_ = set.feature_names();
  }
  if (config.uses_bow()) {
    if (config.vocab_scope == VocabScope::Corpus) {
      if (!config.corpus_vocab)
        throw ValidationError("corpus-scope vocabulary requested but none supplied");
      f.vocab_ = *config.corpus_vocab;
    } else {
      bow::VocabularyOptions opts;
      opts.size = config.vocab_size;
      opts.source = "fold";
      f.vocab_ = bow::build_vocabulary(train, opts);
    }
    auto names = f.vocab_->feature_names();
    f.names_.insert(f.names_.end(), names.begin(), names.end());
  }
  if (is_baseline(config.kind)) f.names_ = bow::baseline_feature_names(baseline_mode(config.kind));
  return f;
}

SessionFeatures Featurizer::operator()(const Session& session) const {
  const auto n = static_cast<Eigen::Index>(session.utterances.size());
  if (is_baseline(config_.kind)) {
    const auto mode = baseline_mode(config_.kind);
    Eigen::MatrixXd rows(n, static_cast<Eigen::Index>(names_.size()));
    for (Eigen::Index i = 0; i < n; ++i)
      rows.row(i) = bow::baseline_features(session.utterances[static_cast<std::size_t>(i)].text,
                                           mode)
                        .transpose();
    return make_session_features(session.session_id, names_, std::move(rows));
  }

  SessionFeatures out;
  out.session_id = session.session_id;
  if (config_.uses_llm()) {
    auto it = config_.llm->rows.find(session.session_id);
    if (it == config_.llm->rows.end())
      throw ValidationError(fmt::format("no LLM features for session {}", session.session_id));
    if (it->second.rows() != n)
      throw DimensionMismatch(fmt::format("{}: LLM rows {} != utterances {}",
                                          session.session_id, it->second.rows(), n));
    Eigen::MatrixXd rows(n, static_cast<Eigen::Index>(llm_columns_.size()));
    for (std::size_t j = 0; j < llm_columns_.size(); ++j)
      rows.col(static_cast<Eigen::Index>(j)) = it->second.col(llm_columns_[j]);
    auto names = std::vector<std::string>(
        names_.begin(), names_.begin() + static_cast<std::ptrdiff_t>(llm_columns_.size()));
    out = make_session_features(session.session_id, std::move(names), std::move(rows));
  }
  if (vocab_) {
    Eigen::MatrixXd rows(n, static_cast<Eigen::Index>(vocab_->dimension()));
    for (Eigen::Index i = 0; i < n; ++i)
      rows.row(i) =
          bow::featurize(session.utterances[static_cast<std::size_t>(i)].text, *vocab_)
              .cast<double>()
              .transpose();
    out = concat(out, make_session_features(session.session_id, vocab_->feature_names(),
                                            std::move(rows)));
  }
  return out;
}

}  // namespace instsupp
