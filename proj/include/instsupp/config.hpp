#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "instsupp/corpus.hpp"
#include "instsupp/features.hpp"
#include "instsupp/llm.hpp"
#include "instsupp/remote_backend.hpp"

namespace instsupp {

struct RunConfig {
  Protocol protocol = Protocol::PreK;
  struct Paths {
    /// Manifest CSV `session_id,teacher_id,file`; files relative to it.
    std::filesystem::path transcripts;
    std::filesystem::path labels;
    std::filesystem::path workdir = "work";
  } paths;
  std::string feature_mode = "bow";
  struct Llm {
    std::string backend = "mock";  // mock | remote
    std::string mock_policy = "hash";
    std::string endpoint_url;
    std::string model = "llama-2-7b-chat";
    std::string credential_env = "INSTSUPP_API_KEY";
    std::string mode = "prob";  // prob | binary
    int context = 1;
    int max_concurrency = 11;
    int retry_attempts = 3;
    int retry_backoff_ms = 1000;
  } llm;
  struct Lasso {
    double lambda = 0.1;
    bool non_negative = false;
  } lasso;
  struct Cv {
    int k = 5;
    std::uint64_t seed = 0;
  } cv;
  struct Bow {
    std::size_t K = 300;
    std::string vocab_scope = "fold";  // fold | corpus
  } bow;
};

/// Reads every known field, collecting all problems before throwing
/// ConfigError. Relative paths resolve against `base_dir`.
RunConfig config_from_json(const nlohmann::json& doc,
                           const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const RunConfig& config);

/// Throws ConfigError listing every invalid field.
void validate(const RunConfig& config);

FeatureConfig feature_config(const RunConfig& config);
llm::FeaturizeOptions featurize_options(const RunConfig& config);
std::unique_ptr<llm::ChatBackend> make_backend(const RunConfig& config);

}  // namespace instsupp
