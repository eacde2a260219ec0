#include "instsupp/bow.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "instsupp/errors.hpp"

namespace instsupp::bow {

const std::vector<std::string>& default_stopwords() {
  static const std::vector<std::string> words{
      "a",    "an",    "and",  "are",   "as",   "at",    "be",   "but",  "by",
      "for",  "if",    "in",   "into",  "is",   "it",    "no",   "not",  "of",
      "on",   "or",    "such", "that",  "the",  "their", "then", "there", "these",
      "they", "this",  "to",   "was",   "will", "with"};
  return words;
}

std::vector<std::string> load_stopwords(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open '{}'", path.string()));
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back())))
      line.pop_back();
    if (!line.empty()) words.push_back(line);
  }
  return words;
}

std::vector<std::string> normalize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : text) {
    auto uc = static_cast<unsigned char>(c);
    if (c == ',' || c == '.') continue;
    if (std::isspace(uc)) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
      continue;
    }
    current.push_back(uc < 0x80 ? static_cast<char>(std::tolower(uc)) : c);
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

namespace {

template <typename Sink>
void for_each_ngram(std::span<const std::string> tokens, std::span<const int> sizes,
                    Sink&& sink) {
  std::string gram;
  for (int n : sizes) {
    if (n <= 0) continue;
    const auto un = static_cast<std::size_t>(n);
    if (tokens.size() < un) continue;
    for (std::size_t i = 0; i + un <= tokens.size(); ++i) {
      gram = tokens[i];
      for (std::size_t j = 1; j < un; ++j) {
        gram.push_back(' ');
        gram += tokens[i + j];
      }
      sink(gram);
    }
  }
}

}  // namespace

NgramCounts extract_ngrams(std::span<const std::string> tokens, std::span<const int> sizes) {
  NgramCounts counts;
  for_each_ngram(tokens, sizes, [&](const std::string& g) { ++counts[g]; });
  return counts;
}

Vocabulary::Vocabulary(std::vector<std::string> entries,
                       std::vector<std::int64_t> frequencies, std::string source)
    : entries_(std::move(entries)),
      frequencies_(std::move(frequencies)),
      source_(std::move(source)) {
  if (entries_.size() != frequencies_.size())
    throw ValidationError("vocabulary: entries and frequencies differ in length");
  for (std::size_t i = 0; i < entries_.size(); ++i)
    if (!lookup_.emplace(entries_[i], static_cast<std::ptrdiff_t>(i)).second)
      throw ValidationError(fmt::format("vocabulary: duplicate entry '{}'", entries_[i]));
}

std::vector<std::string> Vocabulary::feature_names() const {
  auto names = entries_;
  names.push_back(kQuestionToken);
  names.push_back(kSpaceToken);
  return names;
}

std::ptrdiff_t Vocabulary::find(const std::string& ngram) const {
  auto it = lookup_.find(ngram);
  return it == lookup_.end() ? -1 : it->second;
}

std::string Vocabulary::to_tsv() const {
  std::string out;
  for (std::size_t i = 0; i < entries_.size(); ++i)
    out += fmt::format("{}\t{}\n", entries_[i], frequencies_[i]);
  out += kQuestionToken + "\t0\n";
  out += kSpaceToken + "\t0\n";
  return out;
}

Vocabulary Vocabulary::from_tsv(std::string_view text, std::string source) {
  std::vector<std::string> names;
  std::vector<std::int64_t> freqs;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) {
      auto tab = line.rfind('\t');
      if (tab == std::string_view::npos)
        throw ParseError("vocabulary line without tab", pos);
      names.emplace_back(line.substr(0, tab));
      std::int64_t f = 0;
      try {
        f = std::stoll(std::string(line.substr(tab + 1)));
      } catch (const std::exception&) {
        throw ParseError("vocabulary frequency is not an integer", pos + tab + 1);
      }
      freqs.push_back(f);
    }
    pos = eol + 1;
  }
  if (names.size() < 2 || names[names.size() - 2] != kQuestionToken ||
      names.back() != kSpaceToken)
    throw ValidationError("vocabulary file must end with the '?' and ' ' pseudo-tokens");
  names.resize(names.size() - 2);
  freqs.resize(freqs.size() - 2);
  return Vocabulary(std::move(names), std::move(freqs), std::move(source));
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  out << to_tsv();
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open '{}'", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_tsv(buf.str(), path.string());
}

Vocabulary build_vocabulary(std::span<const Session* const> sessions,
                            const VocabularyOptions& options) {
  if (sessions.empty()) throw ValidationError("build_vocabulary: no sessions");
  std::unordered_map<std::string, std::int64_t> counts;
  for (const Session* s : sessions)
    for (const auto& u : s->utterances) {
      auto tokens = normalize(u.text);
      for_each_ngram(tokens, options.ngram_sizes,
                     [&](const std::string& g) { ++counts[g]; });
    }

  const std::set<std::string> stop(options.stopwords.begin(), options.stopwords.end());
  std::vector<std::pair<std::string, std::int64_t>> candidates;
  candidates.reserve(counts.size());
  for (auto& [gram, n] : counts)
    if (!stop.count(gram)) candidates.emplace_back(gram, n);

  if (candidates.size() < options.size)
    throw UnderfullVocabulary(
        fmt::format("only {} candidate n-grams for a vocabulary of {}", candidates.size(),
                    options.size),
        candidates.size());

  auto by_rank = [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  };
  std::partial_sort(candidates.begin(),
                    candidates.begin() + static_cast<std::ptrdiff_t>(options.size),
                    candidates.end(), by_rank);

  std::vector<std::string> entries;
  std::vector<std::int64_t> freqs;
  for (std::size_t i = 0; i < options.size; ++i) {
    entries.push_back(std::move(candidates[i].first));
    freqs.push_back(candidates[i].second);
  }
  return Vocabulary(std::move(entries), std::move(freqs), options.source);
}

Vocabulary build_vocabulary(const Corpus& corpus, const VocabularyOptions& options) {
  std::vector<const Session*> ptrs;
  for (const auto& s : corpus.sessions) ptrs.push_back(&s);
  return build_vocabulary(std::span<const Session* const>(ptrs), options);
}

BowVector featurize(std::string_view text, const Vocabulary& vocab,
                    std::span<const int> sizes) {
  const auto n = vocab.entries().size();
  BowVector counts = BowVector::Zero(static_cast<Eigen::Index>(n + 2));
  auto tokens = normalize(text);
  for_each_ngram(tokens, sizes, [&](const std::string& g) {
    auto idx = vocab.find(g);
    if (idx >= 0) ++counts[idx];
  });
  counts[static_cast<Eigen::Index>(n)] = std::count(text.begin(), text.end(), '?');
  counts[static_cast<Eigen::Index>(n + 1)] = std::count(text.begin(), text.end(), ' ');
  return counts;
}

Eigen::VectorXd baseline_features(std::string_view text, BaselineMode mode) {
  const auto words = static_cast<double>(std::count(text.begin(), text.end(), ' '));
  const auto questions = static_cast<double>(std::count(text.begin(), text.end(), '?'));
  switch (mode) {
    case BaselineMode::Words: return Eigen::VectorXd::Constant(1, words);
    case BaselineMode::Questions: return Eigen::VectorXd::Constant(1, questions);
    case BaselineMode::Both: return Eigen::Vector2d(words, questions);
  }
  return {};
}

std::vector<std::string> baseline_feature_names(BaselineMode mode) {
  switch (mode) {
    case BaselineMode::Words: return {"words"};
    case BaselineMode::Questions: return {"questions"};
    case BaselineMode::Both: return {"words", "questions"};
  }
  return {};
}

}  // namespace instsupp::bow
