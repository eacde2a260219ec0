#include "instsupp/config.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "instsupp/errors.hpp"

namespace instsupp {

using nlohmann::json;

namespace {

class Reader {
 public:
  explicit Reader(std::vector<std::string>& problems) : problems_(problems) {}

  template <typename T>
  void read(const json& obj, const char* key, const std::string& path, T& out) {
    if (!obj.is_object() || !obj.contains(key)) return;
    try {
      out = obj.at(key).get<T>();
    } catch (const json::exception&) {
      problems_.push_back(fmt::format("{}: wrong type ({})", path, obj.at(key).type_name()));
    }
  }

  const json& section(const json& doc, const char* key) {
    static const json empty = json::object();
    if (!doc.contains(key)) return empty;
    if (!doc.at(key).is_object()) {
      problems_.push_back(fmt::format("{}: must be an object", key));
      return empty;
    }
    return doc.at(key);
  }

 private:
  std::vector<std::string>& problems_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

RunConfig config_from_json(const json& doc, const std::filesystem::path& base_dir) {
  std::vector<std::string> problems;
  if (!doc.is_object()) throw ConfigError({"configuration root must be an object"});
  Reader r(problems);
  RunConfig c;

  std::string protocol = to_string(c.protocol);
  r.read(doc, "protocol", "protocol", protocol);
  try {
    c.protocol = parse_protocol(protocol);
  } catch (const ValidationError&) {
    problems.push_back(fmt::format("protocol: '{}' is not toddler|prek", protocol));
  }

  const auto& paths = r.section(doc, "paths");
  std::string transcripts, labels, workdir = c.paths.workdir.string();
  r.read(paths, "transcripts", "paths.transcripts", transcripts);
  r.read(paths, "labels", "paths.labels", labels);
  r.read(paths, "workdir", "paths.workdir", workdir);
  c.paths.transcripts = resolve(base_dir, transcripts);
  c.paths.labels = resolve(base_dir, labels);
  c.paths.workdir = resolve(base_dir, workdir);

  r.read(doc, "feature_mode", "feature_mode", c.feature_mode);

  const auto& llm = r.section(doc, "llm");
  r.read(llm, "backend", "llm.backend", c.llm.backend);
  r.read(llm, "mock_policy", "llm.mock_policy", c.llm.mock_policy);
  r.read(llm, "endpoint_url", "llm.endpoint_url", c.llm.endpoint_url);
  r.read(llm, "model", "llm.model", c.llm.model);
  r.read(llm, "credential_env", "llm.credential_env", c.llm.credential_env);
  r.read(llm, "mode", "llm.mode", c.llm.mode);
  r.read(llm, "context", "llm.context", c.llm.context);
  r.read(llm, "max_concurrency", "llm.max_concurrency", c.llm.max_concurrency);
  r.read(llm, "retry_attempts", "llm.retry_attempts", c.llm.retry_attempts);
  r.read(llm, "retry_backoff_ms", "llm.retry_backoff_ms", c.llm.retry_backoff_ms);
  if (llm.contains("credential") || llm.contains("api_key"))
    problems.push_back("llm: credentials are read only from the environment variable "
                       "named by llm.credential_env");

  const auto& lasso = r.section(doc, "lasso");
  r.read(lasso, "lambda", "lasso.lambda", c.lasso.lambda);
  r.read(lasso, "non_negative", "lasso.non_negative", c.lasso.non_negative);

  const auto& cv = r.section(doc, "cv");
  r.read(cv, "k", "cv.k", c.cv.k);
  r.read(cv, "seed", "cv.seed", c.cv.seed);

  const auto& bow = r.section(doc, "bow");
  r.read(bow, "K", "bow.K", c.bow.K);
  r.read(bow, "vocab_scope", "bow.vocab_scope", c.bow.vocab_scope);

  // Report value problems alongside type problems so one run lists everything.
  try {
    validate(c);
  } catch (const ConfigError& e) {
    problems.insert(problems.end(), e.problems().begin(), e.problems().end());
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open config '{}'", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  json doc;
  try {
    doc = json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw ParseError(fmt::format("{}: malformed at byte {}", path.string(), e.byte), e.byte);
  }
  return config_from_json(doc, path.parent_path());
}

json config_to_json(const RunConfig& c) {
  return {{"protocol", to_string(c.protocol)},
          {"paths",
           {{"transcripts", c.paths.transcripts.string()},
            {"labels", c.paths.labels.string()},
            {"workdir", c.paths.workdir.string()}}},
          {"feature_mode", c.feature_mode},
          {"llm",
           {{"backend", c.llm.backend},
            {"mock_policy", c.llm.mock_policy},
            {"endpoint_url", c.llm.endpoint_url},
            {"model", c.llm.model},
            {"credential_env", c.llm.credential_env},
            {"mode", c.llm.mode},
            {"context", c.llm.context},
            {"max_concurrency", c.llm.max_concurrency},
            {"retry_attempts", c.llm.retry_attempts},
            {"retry_backoff_ms", c.llm.retry_backoff_ms}}},
          {"lasso", {{"lambda", c.lasso.lambda}, {"non_negative", c.lasso.non_negative}}},
          {"cv", {{"k", c.cv.k}, {"seed", c.cv.seed}}},
          {"bow", {{"K", c.bow.K}, {"vocab_scope", c.bow.vocab_scope}}}};
}

void validate(const RunConfig& c) {
  std::vector<std::string> problems;
  try {
    (void)parse_feature_config(c.feature_mode);
  } catch (const ValidationError& e) {
    problems.push_back(fmt::format("feature_mode: {}", e.what()));
  }
  if (c.llm.backend != "mock" && c.llm.backend != "remote")
    problems.push_back(fmt::format("llm.backend: '{}' is not mock|remote", c.llm.backend));
  if (c.llm.mock_policy != "hash" && c.llm.mock_policy != "rule")
    problems.push_back(fmt::format("llm.mock_policy: '{}' is not hash|rule", c.llm.mock_policy));
  if (c.llm.backend == "remote" && c.llm.endpoint_url.empty())
    problems.push_back("llm.endpoint_url: required for the remote backend");
  if (c.llm.mode != "prob" && c.llm.mode != "binary")
    problems.push_back(fmt::format("llm.mode: '{}' is not prob|binary", c.llm.mode));
  if (c.llm.context != 1 && c.llm.context != 3)
    problems.push_back(fmt::format("llm.context: {} is not 1 or 3", c.llm.context));
  if (c.llm.max_concurrency < 1) problems.push_back("llm.max_concurrency: must be >= 1");
  if (c.llm.retry_attempts < 1) problems.push_back("llm.retry_attempts: must be >= 1");
  if (c.llm.retry_backoff_ms < 0) problems.push_back("llm.retry_backoff_ms: must be >= 0");
  if (!(c.lasso.lambda >= 0)) problems.push_back("lasso.lambda: must be >= 0");
  if (c.cv.k < 2) problems.push_back("cv.k: must be >= 2");
  if (c.bow.K < 1) problems.push_back("bow.K: must be >= 1");
  if (c.bow.vocab_scope != "fold" && c.bow.vocab_scope != "corpus")
    problems.push_back(fmt::format("bow.vocab_scope: '{}' is not fold|corpus", c.bow.vocab_scope));
  if (c.paths.workdir.empty()) problems.push_back("paths.workdir: must not be empty");
  if (!problems.empty()) throw ConfigError(std::move(problems));
}

FeatureConfig feature_config(const RunConfig& config) {
  auto fc = parse_feature_config(config.feature_mode);
  fc.vocab_size = config.bow.K;
  fc.vocab_scope = config.bow.vocab_scope == "corpus" ? VocabScope::Corpus : VocabScope::Fold;
  return fc;
}

llm::FeaturizeOptions featurize_options(const RunConfig& config) {
  llm::FeaturizeOptions o;
  o.mode = llm::parse_feature_mode(config.llm.mode);
  o.context = config.llm.context;
  o.max_concurrency = static_cast<std::size_t>(config.llm.max_concurrency);
  o.retry.attempts = config.llm.retry_attempts;
  o.retry.initial_backoff = std::chrono::milliseconds(config.llm.retry_backoff_ms);
  return o;
}

std::unique_ptr<llm::ChatBackend> make_backend(const RunConfig& config) {
  if (config.llm.backend == "remote") {
    llm::RemoteConfig rc;
    rc.endpoint_url = config.llm.endpoint_url;
    rc.model = config.llm.model;
    rc.credential_env = config.llm.credential_env;
    return std::make_unique<llm::RemoteBackend>(std::move(rc));
  }
  return llm::mock_backend(config.cv.seed, llm::parse_mock_policy(config.llm.mock_policy));
}

}  // namespace instsupp
