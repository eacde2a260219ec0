#include <doctest.h>

#include <algorithm>

#include <json.hpp>

#include "instsupp/config.hpp"
#include "instsupp/errors.hpp"
#include "instsupp/features.hpp"

using namespace instsupp;
using nlohmann::json;

namespace {

bool mentions(const ConfigError& e, const std::string& field) {
  return std::any_of(e.problems().begin(), e.problems().end(),
                     [&](const std::string& p) { return p.rfind(field, 0) == 0; });
}

}  // namespace

TEST_CASE("defaults") {
  RunConfig c;
  CHECK(c.lasso.lambda == 0.1);
  CHECK(c.cv.k == 5);
  CHECK(c.bow.K == 300);
  CHECK(c.llm.max_concurrency == 11);
  CHECK_NOTHROW(validate(c));
  auto fc = feature_config(c);
  CHECK(fc.kind == FeatureKind::Bow);
  CHECK(fc.vocab_scope == VocabScope::Fold);
}

TEST_CASE("every violated field is reported at once") {
  auto doc = json::parse(R"({
    "protocol": "kindergarten",
    "feature_mode": "llm_dim:dim9",
    "llm": {"backend": "remote", "mode": "maybe", "context": 2, "max_concurrency": 0},
    "lasso": {"lambda": -1},
    "cv": {"k": "five"},
    "bow": {"K": 0, "vocab_scope": "galaxy"}
  })");
  try {
    config_from_json(doc);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    for (const char* field : {"protocol", "feature_mode", "llm.endpoint_url", "llm.mode",
                              "llm.context", "llm.max_concurrency", "lasso.lambda", "cv.k",
                              "bow.K", "bow.vocab_scope"})
      CHECK_MESSAGE(mentions(e, field), field);
    CHECK(std::string(e.what()).find("lasso.lambda") != std::string::npos);
  }
}

TEST_CASE("credentials cannot be placed in the config file") {
  auto doc = json::parse(R"({"llm": {"api_key": "sk-123"}})");
  CHECK_THROWS_AS(config_from_json(doc), ConfigError);
}

TEST_CASE("round trip and relative path resolution") {
  auto doc = json::parse(R"({
    "protocol": "toddler",
    "paths": {"transcripts": "m.csv", "labels": "/abs/labels.csv", "workdir": "out"},
    "feature_mode": "concat",
    "llm": {"mode": "binary", "context": 3},
    "lasso": {"lambda": 0.25, "non_negative": true},
    "cv": {"k": 4, "seed": 12}
  })");
  auto c = config_from_json(doc, "/data/run");
  CHECK(c.protocol == Protocol::Toddler);
  CHECK(c.paths.transcripts == "/data/run/m.csv");
  CHECK(c.paths.labels == "/abs/labels.csv");
  CHECK(c.paths.workdir == "/data/run/out");
  CHECK(c.lasso.non_negative);
  CHECK(c.cv.seed == 12);
  auto back = config_from_json(config_to_json(c));
  CHECK(config_to_json(back).dump() == config_to_json(c).dump());
  auto opts = featurize_options(c);
  CHECK(opts.mode == llm::FeatureMode::Binary);
  CHECK(opts.context == 3);
}

TEST_CASE("feature mode names") {
  CHECK(parse_feature_config("llm_dim:dim2").kind == FeatureKind::LlmDim);
  CHECK(parse_feature_config("llm_dim:dim2").llm_dimension == Dimension::Dim2);
  CHECK(feature_mode_name(parse_feature_config("llm_dim:dim3")) == "llm_dim:dim3");
  CHECK_THROWS_AS(parse_feature_config("llm_dim:domain"), ValidationError);
  CHECK(feature_mode_name(parse_feature_config("baseline_questions")) == "baseline_questions");
  CHECK_THROWS_AS(parse_feature_config("tfidf"), ValidationError);
}
