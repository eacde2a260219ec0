#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Core>

#include "instsupp/corpus.hpp"

namespace instsupp::llm {

inline constexpr const char* kFeatureSystemMessage = "Answer YES or NO.";
inline constexpr const char* kExplainSystemMessage =
    "Answer YES or NO and explain the reasoning.";

struct IndicatorGroup {
  Dimension dimension;
  std::size_t first;
  std::size_t count;
};

/// Behavioral-indicator phrases for one protocol, grouped by dimension.
struct IndicatorSet {
  Protocol protocol = Protocol::PreK;
  std::vector<std::string> indicators;
  std::vector<IndicatorGroup> groups;
  /// Position of each indicator in the protocol's full list.
  std::vector<std::size_t> source_index;

  std::size_t size() const { return indicators.size(); }
  /// "llm:<phrase>" per indicator.
  std::vector<std::string> feature_names() const;
};

/// The full list for a protocol: 11 PreK indicators or 10 toddler ones.
const IndicatorSet& indicator_set(Protocol protocol);

/// Indicators of one dimension, order preserved. Domain returns the full set.
IndicatorSet subset(const IndicatorSet& set, Dimension dimension);

struct ChatRequest {
  std::string system;
  std::string user;
  double temperature = 0.6;
  double top_p = 0.9;
  int max_tokens = 4;
  bool want_first_token_logprob = true;
  // Context for test doubles; never sent over the wire.
  std::string indicator;
  std::string input_text;
};

struct ChatResponse {
  std::string text;
  std::string first_token;
  std::optional<double> first_token_logprob;
};

/// Chat-completion backend. Implementations must allow concurrent calls.
/// Transient failures are reported as TransportError.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual ChatResponse complete(const ChatRequest& request) = 0;
  /// Stable description used to key feature caches.
  virtual std::string identity() const = 0;
};

enum class MockPolicy { Hash, Rule };

/// Deterministic stand-in for a chat model.
///   hash: YES iff FNV-1a(indicator, text, seed) is even; logprob -(h mod 1000)/1000
///   rule: YES iff text has '?' and one of why/how/what; logprob -0.1
class MockBackend final : public ChatBackend {
 public:
  static constexpr const char* kExplanation =
      "YES. Mock backend: no model was consulted, so no reasoning is available.";

  MockBackend(std::uint64_t seed, MockPolicy policy) : seed_(seed), policy_(policy) {}
  ChatResponse complete(const ChatRequest& request) override;
  std::string identity() const override;

 private:
  std::uint64_t seed_;
  MockPolicy policy_;
};

std::unique_ptr<ChatBackend> mock_backend(std::uint64_t seed, MockPolicy policy);
MockPolicy parse_mock_policy(std::string_view token);

/// Feature-mode request for one indicator and utterance text. The user
/// message is the fixed question with the indicator in single quotes,
/// a newline, then the text in double quotes.
ChatRequest render_prompt(const std::string& indicator, const std::string& input_text,
                          Protocol protocol);

enum class FeatureMode { Prob, Binary };
FeatureMode parse_feature_mode(std::string_view token);
std::string to_string(FeatureMode mode);

/// True when the first token is YES after trimming whitespace and
/// punctuation and uppercasing.
bool is_yes_token(std::string_view token);

/// exp(logprob) or 1 when the first token is YES, otherwise 0.
double parse_yes_feature(const ChatResponse& response, FeatureMode mode);

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};
};

/// Thread-safe (session, utterance, indicator) -> value store, persisted as
/// CSV so interrupted remote runs resume where they stopped.
class FeatureCache {
 public:
  FeatureCache() = default;
  FeatureCache(FeatureCache&& other) noexcept : values_(std::move(other.values_)) {}
  FeatureCache& operator=(FeatureCache&& other) noexcept {
    values_ = std::move(other.values_);
    return *this;
  }

  std::optional<double> lookup(const std::string& session_id, std::size_t utterance,
                               std::size_t indicator) const;
  void store(const std::string& session_id, std::size_t utterance, std::size_t indicator,
             double value);
  std::size_t size() const;

  void save(const std::filesystem::path& path) const;
  static FeatureCache load(const std::filesystem::path& path);

 private:
  using Key = std::tuple<std::string, std::size_t, std::size_t>;
  mutable std::mutex mutex_;
  std::map<Key, double> values_;
};

struct FeaturizeOptions {
  FeatureMode mode = FeatureMode::Prob;
  /// 1 = the utterance alone; 3 = previous, current and next utterance.
  int context = 1;
  std::size_t max_concurrency = 1;
  RetryPolicy retry;
};

/// The text queried for utterance `i`: the utterance itself, or with
/// context 3 its non-empty neighbors joined by single spaces.
std::string query_text(const Session& session, std::size_t i, int context);

/// One row per utterance, one column per indicator. Either every request
/// succeeds or RequestFailed is thrown and nothing is returned.
Eigen::MatrixXd featurize_llm(ChatBackend& backend, const Session& session,
                              const IndicatorSet& set, const FeaturizeOptions& options,
                              FeatureCache* cache = nullptr);

/// Free-text rationale from the explanation-mode system message.
std::string explain_indicator(ChatBackend& backend, const std::string& indicator,
                              const std::string& text, Protocol protocol,
                              const RetryPolicy& retry = {});

}  // namespace instsupp::llm
