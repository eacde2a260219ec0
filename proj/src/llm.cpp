#include "instsupp/llm.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "instsupp/csv.hpp"
#include "instsupp/errors.hpp"
#include "instsupp/hash.hpp"

namespace instsupp {

std::string Fnv1a::hex() const { return fmt::format("{:016x}", state_); }

namespace llm {

namespace {

IndicatorSet make_prek() {
  IndicatorSet s;
  s.protocol = Protocol::PreK;
  s.indicators = {"promote analysis and reasoning",
                  "facilitate creativity by brainstorming and/or planning",
                  "help students to make connections",
                  "provide scaffolding",
                  "provide information",
                  "ask students to explain their reasoning",
                  "encourage and affirms",
                  "ask open-ended questions",
                  "repeat and extend students' language",
                  "perform self- and parallel talk",
                  "use advanced language"};
  s.groups = {{Dimension::Dim1, 0, 3}, {Dimension::Dim2, 3, 4}, {Dimension::Dim3, 7, 4}};
  for (std::size_t i = 0; i < s.indicators.size(); ++i) s.source_index.push_back(i);
  return s;
}

// Dimension grouping mirrors the PreK layout: 3 / 3 / 4.
IndicatorSet make_toddler() {
  IndicatorSet s;
  s.protocol = Protocol::Toddler;
  s.indicators = {"provide active facilitation of children's learning",
                  "expand children's cognition",
                  "promote children's active engagement",
                  "provide scaffolding",
                  "provide information",
                  "encourage and affirms",
                  "ask open-ended questions",
                  "repeat and extend students' language",
                  "perform self- and parallel talk",
                  "use advanced language"};
  s.groups = {{Dimension::Dim1, 0, 3}, {Dimension::Dim2, 3, 3}, {Dimension::Dim3, 6, 4}};
  for (std::size_t i = 0; i < s.indicators.size(); ++i) s.source_index.push_back(i);
  return s;
}

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

ChatResponse answer(bool yes, double logprob) {
  ChatResponse r;
  r.first_token = yes ? "YES" : "NO";
  r.text = r.first_token;
  r.first_token_logprob = logprob;
  return r;
}

template <typename Fn>
auto with_retry(const RetryPolicy& retry, Fn&& fn) -> decltype(fn()) {
  auto backoff = retry.initial_backoff;
  for (int attempt = 1;; ++attempt) {
    try {
      return fn();
    } catch (const TransportError&) {
      if (attempt >= retry.attempts) throw;
    }
    std::this_thread::sleep_for(backoff);
    backoff *= 2;
  }
}

}  // namespace

std::vector<std::string> IndicatorSet::feature_names() const {
  std::vector<std::string> names;
  for (const auto& i : indicators) names.push_back("llm:" + i);
  return names;
}

const IndicatorSet& indicator_set(Protocol protocol) {
  static const IndicatorSet prek = make_prek();
  static const IndicatorSet toddler = make_toddler();
  return protocol == Protocol::PreK ? prek : toddler;
}

IndicatorSet subset(const IndicatorSet& set, Dimension dimension) {
  if (dimension == Dimension::Domain) return set;
  auto g = std::find_if(set.groups.begin(), set.groups.end(),
                        [&](const IndicatorGroup& grp) { return grp.dimension == dimension; });
  if (g == set.groups.end())
    throw ValidationError(fmt::format("indicator set has no {} group", to_string(dimension)));
  IndicatorSet out;
  out.protocol = set.protocol;
  for (std::size_t i = g->first; i < g->first + g->count; ++i) {
    out.indicators.push_back(set.indicators[i]);
    out.source_index.push_back(set.source_index[i]);
  }
  out.groups = {{dimension, 0, g->count}};
  return out;
}

ChatResponse MockBackend::complete(const ChatRequest& request) {
  const std::string& text = request.indicator.empty() ? request.user : request.input_text;
  bool yes = false;
  double logprob = 0.0;
  if (policy_ == MockPolicy::Hash) {
    auto h = Fnv1a()
                 .field(request.indicator)
                 .field(text)
                 .field(std::to_string(seed_))
                 .digest();
    yes = h % 2 == 0;
    logprob = -static_cast<double>(h % 1000) / 1000.0;
  } else {
    auto t = ascii_lower(text);
    yes = t.find('?') != std::string::npos &&
          (t.find("why") != std::string::npos || t.find("how") != std::string::npos ||
           t.find("what") != std::string::npos);
    logprob = -0.1;
  }
  auto r = answer(yes, logprob);
  if (request.system == kExplainSystemMessage) {
    r.text = kExplanation;
    r.first_token = "YES";
  }
  return r;
}

std::string MockBackend::identity() const {
  return fmt::format("mock/{}/{}", policy_ == MockPolicy::Hash ? "hash" : "rule", seed_);
}

std::unique_ptr<ChatBackend> mock_backend(std::uint64_t seed, MockPolicy policy) {
  return std::make_unique<MockBackend>(seed, policy);
}

MockPolicy parse_mock_policy(std::string_view token) {
  if (token == "hash") return MockPolicy::Hash;
  if (token == "rule") return MockPolicy::Rule;
  throw ValidationError(fmt::format("unknown mock policy '{}'", token));
}

ChatRequest render_prompt(const std::string& indicator, const std::string& input_text,
                          Protocol protocol) {
  const auto& set = indicator_set(protocol);
  if (std::find(set.indicators.begin(), set.indicators.end(), indicator) ==
      set.indicators.end())
    throw ValidationError(
        fmt::format("'{}' is not a {} indicator", indicator, to_string(protocol)));
  ChatRequest req;
  req.system = kFeatureSystemMessage;
  req.user = fmt::format(
      "In the context of a preschool classroom in which a teacher is talking to their "
      "students, does the following sentence '{}' and help students to grow "
      "cognitively?\n\"{}\"",
      indicator, input_text);
  req.indicator = indicator;
  req.input_text = input_text;
  return req;
}

FeatureMode parse_feature_mode(std::string_view token) {
  if (token == "prob") return FeatureMode::Prob;
  if (token == "binary") return FeatureMode::Binary;
  throw ValidationError(fmt::format("unknown llm mode '{}'", token));
}

std::string to_string(FeatureMode mode) {
  return mode == FeatureMode::Prob ? "prob" : "binary";
}

bool is_yes_token(std::string_view token) {
  // SentencePiece marks a leading space with U+2581.
  constexpr std::string_view kSpaceMarker = "\xe2\x96\x81";
  while (token.substr(0, kSpaceMarker.size()) == kSpaceMarker)
    token.remove_prefix(kSpaceMarker.size());
  auto trim = [](unsigned char c) { return std::isspace(c) || std::ispunct(c); };
  while (!token.empty() && trim(static_cast<unsigned char>(token.front())))
    token.remove_prefix(1);
  while (!token.empty() && trim(static_cast<unsigned char>(token.back())))
    token.remove_suffix(1);
  if (token.size() != 3) return false;
  return std::toupper(static_cast<unsigned char>(token[0])) == 'Y' &&
         std::toupper(static_cast<unsigned char>(token[1])) == 'E' &&
         std::toupper(static_cast<unsigned char>(token[2])) == 'S';
}

double parse_yes_feature(const ChatResponse& response, FeatureMode mode) {
  if (!is_yes_token(response.first_token)) return 0.0;
  if (mode == FeatureMode::Binary) return 1.0;
  if (!response.first_token_logprob)
    throw BackendContract("backend did not return a first-token logprob");
  const double lp = *response.first_token_logprob;
  if (std::isnan(lp) || lp > 0.0)
    throw BackendContract(fmt::format("first-token logprob {} is not <= 0", lp));
  return std::exp(lp);
}

std::optional<double> FeatureCache::lookup(const std::string& session_id,
                                           std::size_t utterance,
                                           std::size_t indicator) const {
  std::lock_guard lock(mutex_);
  auto it = values_.find(Key{session_id, utterance, indicator});
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

void FeatureCache::store(const std::string& session_id, std::size_t utterance,
                         std::size_t indicator, double value) {
  std::lock_guard lock(mutex_);
  values_[Key{session_id, utterance, indicator}] = value;
}

std::size_t FeatureCache::size() const {
  std::lock_guard lock(mutex_);
  return values_.size();
}

void FeatureCache::save(const std::filesystem::path& path) const {
  std::lock_guard lock(mutex_);
  std::string out = "session_id,utterance_index,indicator_index,value\n";
  for (const auto& [key, value] : values_)
    out += csv::format_row({std::get<0>(key), std::to_string(std::get<1>(key)),
                            std::to_string(std::get<2>(key)), csv::format_double(value)});
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw Error(fmt::format("cannot write '{}'", tmp.string()));
    f << out;
  }
  std::filesystem::rename(tmp, path);
}

FeatureCache FeatureCache::load(const std::filesystem::path& path) {
  FeatureCache cache;
  std::ifstream in(path, std::ios::binary);
  if (!in) return cache;
  std::ostringstream buf;
  buf << in.rdbuf();
  auto rows = csv::parse(buf.str());
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != 4)
      throw ValidationError(fmt::format("{}: line {} malformed", path.string(), r + 1));
    cache.values_[Key{row[0], std::stoull(row[1]), std::stoull(row[2])}] =
        csv::parse_double(row[3]);
  }
  return cache;
}

std::string query_text(const Session& session, std::size_t i, int context) {
  const auto& utts = session.utterances;
  if (context == 1) return utts.at(i).text;
  if (context != 3) throw ValidationError(fmt::format("context must be 1 or 3, got {}", context));
  std::string out;
  auto append = [&](const std::string& t) {
    if (t.empty()) return;
    if (!out.empty()) out.push_back(' ');
    out += t;
  };
  if (i > 0) append(utts[i - 1].text);
  append(utts.at(i).text);
  if (i + 1 < utts.size()) append(utts[i + 1].text);
  return out;
}

Eigen::MatrixXd featurize_llm(ChatBackend& backend, const Session& session,
                              const IndicatorSet& set, const FeaturizeOptions& options,
                              FeatureCache* cache) {
  if (options.context != 1 && options.context != 3)
    throw ValidationError(fmt::format("context must be 1 or 3, got {}", options.context));
  const std::size_t n = session.utterances.size();
  const std::size_t d = set.size();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));

  std::vector<std::string> texts(n);
  for (std::size_t i = 0; i < n; ++i) texts[i] = query_text(session, i, options.context);

  const std::size_t tasks = n * d;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex error_mutex;
  std::size_t first_failed_task = tasks;
  std::exception_ptr first_error;

  auto run_task = [&](std::size_t t) {
    const std::size_t i = t / d;
    const std::size_t j = t % d;
    const std::size_t source = set.source_index[j];
    if (cache) {
      if (auto v = cache->lookup(session.session_id, i, source)) {
        out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = *v;
        return;
      }
    }
    auto request = render_prompt(set.indicators[j], texts[i], set.protocol);
    double value = with_retry(options.retry, [&] {
      return parse_yes_feature(backend.complete(request), options.mode);
    });
    out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = value;
    if (cache) cache->store(session.session_id, i, source, value);
  };

  auto worker = [&] {
    for (;;) {
      if (failed.load()) return;
      std::size_t t = next.fetch_add(1);
      if (t >= tasks) return;
      try {
        run_task(t);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (t < first_failed_task) {
          first_failed_task = t;
          first_error = std::current_exception();
        }
        failed.store(true);
        return;
      }
    }
  };

  const std::size_t threads = std::clamp<std::size_t>(options.max_concurrency, 1, tasks ? tasks : 1);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t k = 0; k < threads; ++k) pool.emplace_back(worker);
  }

  if (first_error) {
    const std::size_t i = first_failed_task / d;
    const std::string& indicator = set.indicators[first_failed_task % d];
    try {
      std::rethrow_exception(first_error);
    } catch (const TransportError& e) {
      throw RequestFailed(fmt::format("{} utterance {} indicator '{}': {}", session.session_id,
                                      i, indicator, e.what()),
                          session.session_id, i, indicator);
    }
  }
  return out;
}

std::string explain_indicator(ChatBackend& backend, const std::string& indicator,
                              const std::string& text, Protocol protocol,
                              const RetryPolicy& retry) {
  auto request = render_prompt(indicator, text, protocol);
  request.system = kExplainSystemMessage;
  request.max_tokens = 512;
  request.want_first_token_logprob = false;
  try {
    return with_retry(retry, [&] { return backend.complete(request).text; });
  } catch (const TransportError& e) {
    throw RequestFailed(fmt::format("explanation for '{}': {}", indicator, e.what()), "", 0,
                        indicator);
  }
}

}  // namespace llm
}  // namespace instsupp
