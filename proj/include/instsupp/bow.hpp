#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "instsupp/corpus.hpp"

namespace instsupp::bow {

/// The 33-word stop-word list; a copy ships as data/stopwords.txt.
const std::vector<std::string>& default_stopwords();
std::vector<std::string> load_stopwords(const std::filesystem::path& path);

/// Lowercases ASCII letters, deletes ',' and '.', splits on whitespace.
/// Stop-words stay in the stream; they are filtered at vocabulary time.
std::vector<std::string> normalize(std::string_view text);

using NgramCounts = std::map<std::string, std::int64_t>;

inline constexpr int kDefaultNgramSizes[] = {1, 2, 3, 4};

/// Every contiguous window of each size in `sizes`, joined by single
/// spaces; overlapping windows all count.
NgramCounts extract_ngrams(std::span<const std::string> tokens,
                           std::span<const int> sizes = kDefaultNgramSizes);

/// Integer count vector aligned to a Vocabulary's feature names.
using BowVector = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;

inline const std::string kQuestionToken = "?";
inline const std::string kSpaceToken = " ";

class Vocabulary {
 public:
  Vocabulary() = default;
  Vocabulary(std::vector<std::string> entries, std::vector<std::int64_t> frequencies,
             std::string source);

  /// The selected n-grams, most frequent first.
  const std::vector<std::string>& entries() const { return entries_; }
  const std::vector<std::int64_t>& frequencies() const { return frequencies_; }
  const std::string& source() const { return source_; }

  /// entries() followed by the "?" and " " pseudo-tokens.
  std::vector<std::string> feature_names() const;
  std::size_t dimension() const { return entries_.size() + 2; }

  /// Position of an n-gram in entries(), or -1.
  std::ptrdiff_t find(const std::string& ngram) const;

  /// `<ngram>\t<frequency>` per line, pseudo-tokens last with frequency 0.
  std::string to_tsv() const;
  static Vocabulary from_tsv(std::string_view text, std::string source = {});
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

 private:
  std::vector<std::string> entries_;
  std::vector<std::int64_t> frequencies_;
  std::string source_;
  std::unordered_map<std::string, std::ptrdiff_t> lookup_;
};

struct VocabularyOptions {
  std::size_t size = 300;
  std::vector<int> ngram_sizes{1, 2, 3, 4};
  std::vector<std::string> stopwords = default_stopwords();
  std::string source;
};

/// Top-K n-grams by total occurrence count over every utterance, skipping
/// n-grams that are exactly a stop-word. Ties at equal count are broken
/// lexicographically ascending. Throws UnderfullVocabulary when fewer than
/// K candidates exist.
Vocabulary build_vocabulary(std::span<const Session* const> sessions,
                            const VocabularyOptions& options = {});
Vocabulary build_vocabulary(const Corpus& corpus, const VocabularyOptions& options = {});

/// Vocabulary n-gram counts plus raw-text counts of '?' and ' '.
BowVector featurize(std::string_view text, const Vocabulary& vocab,
                    std::span<const int> sizes = kDefaultNgramSizes);

enum class BaselineMode { Words, Questions, Both };

/// Word proxy is the raw count of ' ' characters; questions count '?'.
Eigen::VectorXd baseline_features(std::string_view text, BaselineMode mode);
std::vector<std::string> baseline_feature_names(BaselineMode mode);

}  // namespace instsupp::bow
