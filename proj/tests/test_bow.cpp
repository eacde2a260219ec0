#include <doctest.h>

#include <random>

#include "instsupp/bow.hpp"
#include "instsupp/errors.hpp"
#include "support.hpp"

using namespace instsupp;
using Tokens = std::vector<std::string>;

TEST_CASE("normalize lowercases and strips commas and periods") {
  CHECK(bow::normalize("The dog, is BIG.") == Tokens{"the", "dog", "is", "big"});
  CHECK(bow::normalize("What animal roars?") == Tokens{"what", "animal", "roars?"});
  CHECK(bow::normalize("").empty());
  CHECK(bow::normalize("  tabs\tand\nnewlines  ") == Tokens{"tabs", "and", "newlines"});
  CHECK(bow::normalize("Don't STOP!") == Tokens{"don't", "stop!"});
}

TEST_CASE("n-gram enumeration") {
  const Tokens abc{"a", "b", "c"};
  const int one_two[] = {1, 2};
  CHECK(bow::extract_ngrams(abc, one_two) ==
        bow::NgramCounts{{"a", 1}, {"b", 1}, {"c", 1}, {"a b", 1}, {"b c", 1}});
  const int two[] = {2};
  CHECK(bow::extract_ngrams(Tokens{"go", "go", "go"}, two) == bow::NgramCounts{{"go go", 2}});
  const int four[] = {4};
  const int one[] = {1};
  CHECK(bow::extract_ngrams(Tokens{"dog"}, four).empty());
  CHECK(bow::extract_ngrams(Tokens{"dog"}, one) == bow::NgramCounts{{"dog", 1}});
}

TEST_CASE("stop-word unigrams are excluded from the vocabulary") {
  std::vector<std::string> lines;
  for (int i = 0; i < 50; ++i) lines.push_back("you");
  for (int i = 0; i < 80; ++i) lines.push_back("the");
  for (int i = 0; i < 40; ++i) lines.push_back("go");
  Corpus c;
  c.sessions.push_back(testing::make_session("s", "t", lines));
  bow::VocabularyOptions opts;
  opts.size = 2;
  opts.ngram_sizes = {1};
  auto v = bow::build_vocabulary(c, opts);
  CHECK(v.entries() == Tokens{"you", "go"});
  CHECK(v.frequencies() == std::vector<std::int64_t>{50, 40});
  auto names = v.feature_names();
  REQUIRE(names.size() == 4);
  CHECK(names[2] == "?");
  CHECK(names[3] == " ");
}

TEST_CASE("stop-word bigrams are admissible") {
  Corpus c;
  c.sessions.push_back(testing::make_session("s", "t", {"in the box", "in the box", "in the"}));
  bow::VocabularyOptions opts;
  opts.size = 1;
  opts.ngram_sizes = {1, 2};
  CHECK(bow::build_vocabulary(c, opts).entries() == Tokens{"in the"});
}

TEST_CASE("rank ties are broken lexicographically") {
  Corpus c;
  c.sessions.push_back(testing::make_session("s", "t", {"dog cat", "cat dog", "bird"}));
  bow::VocabularyOptions opts;
  opts.size = 1;
  opts.ngram_sizes = {1};
  CHECK(bow::build_vocabulary(c, opts).entries() == Tokens{"cat"});
}

TEST_CASE("underfull vocabulary reports the available count") {
  Corpus c;
  c.sessions.push_back(testing::make_session("s", "t", {"one two"}));
  bow::VocabularyOptions opts;
  opts.size = 10;
  try {
    bow::build_vocabulary(c, opts);
    FAIL("expected UnderfullVocabulary");
  } catch (const UnderfullVocabulary& e) {
    CHECK(e.available() == 3);  // "one", "two", "one two"
  }
}

TEST_CASE("featurize counts n-grams and the raw-text pseudo-tokens") {
  bow::Vocabulary v({"what", "go go", "roars?"}, {1, 1, 1}, "test");
  auto x = bow::featurize("What animal roars?", v);
  REQUIRE(x.size() == 5);
  CHECK(x(0) == 1);
  CHECK(x(1) == 0);
  CHECK(x(2) == 1);
  CHECK(x(3) == 1);  // '?'
  CHECK(x(4) == 2);  // ' '
  CHECK(bow::featurize("", v).isZero());
  CHECK(bow::featurize("go go go", v)(1) == 2);
}

TEST_CASE("baseline features") {
  auto both = bow::baseline_features("Why is it blue?", bow::BaselineMode::Both);
  REQUIRE(both.size() == 2);
  CHECK(both(0) == 3);
  CHECK(both(1) == 1);
  CHECK(bow::baseline_features("", bow::BaselineMode::Both).isZero());
  auto words = bow::baseline_features("Go.", bow::BaselineMode::Words);
  REQUIRE(words.size() == 1);
  CHECK(words(0) == 0);
}

TEST_CASE("vocabulary TSV round trip is byte-stable") {
  bow::Vocabulary v({"a b", "c?", "don't"}, {9, 4, 4}, "x");
  auto back = bow::Vocabulary::from_tsv(v.to_tsv());
  CHECK(back.entries() == v.entries());
  CHECK(back.frequencies() == v.frequencies());
  CHECK(back.to_tsv() == v.to_tsv());
  CHECK_THROWS(bow::Vocabulary::from_tsv("a\t1\n"));
}

TEST_CASE("shipped stop-word list matches the built-in list") {
  CHECK(bow::load_stopwords(std::string(INSTSUPP_DATA_DIR) + "/stopwords.txt") ==
        bow::default_stopwords());
  CHECK(bow::default_stopwords().size() == 33);
}

TEST_CASE("vocabulary and featurization agree with brute force on random text") {
  const std::vector<std::string> words{"You",  "see", "the", "red", "ball.", "in", "Why?",
                                       "what", "is",  "a",   "big,", "dog",   "go", "it"};
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
  std::uniform_int_distribution<int> len(0, 9);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::string> texts;
    for (int u = 0; u < 60; ++u) {
      std::string t;
      for (int w = len(rng); w > 0; --w) t += words[pick(rng)] + (w > 1 ? " " : "");
      texts.push_back(t);
    }
    Corpus c;
    c.sessions.push_back(testing::make_session("s", "t", texts));
    bow::VocabularyOptions opts;
    opts.size = 25;
    auto v = bow::build_vocabulary(c, opts);
    auto expected = testing::oracle_vocabulary(texts, 25, {1, 2, 3, 4}, bow::default_stopwords());
    REQUIRE(v.entries().size() == expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
      CHECK(v.entries()[i] == expected[i].first);
      CHECK(v.frequencies()[i] == expected[i].second);
    }
    for (const auto& text : texts) {
      auto x = bow::featurize(text, v);
      std::string padded = " ";
      for (const auto& tok : testing::oracle_tokens(text)) padded += tok + " ";
      for (std::size_t j = 0; j < v.entries().size(); ++j)
        CHECK(x(static_cast<Eigen::Index>(j)) ==
              testing::oracle_count_substring(padded, " " + v.entries()[j] + " "));
      CHECK(x(x.size() - 2) == testing::oracle_count_substring(text, "?"));
      CHECK(x(x.size() - 1) == testing::oracle_count_substring(text, " "));
    }
  }
}
