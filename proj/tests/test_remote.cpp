#include <doctest.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <json.hpp>

#include "instsupp/errors.hpp"
#include "instsupp/llm.hpp"
#include "instsupp/remote_backend.hpp"
#include "support.hpp"

// After Eigen: resolv.h, pulled in by httplib, defines a `_res` macro.
#include <httplib.h>

using namespace instsupp;
using nlohmann::json;
using namespace std::chrono_literals;

namespace {

// Chat-completions stand-in running on a loopback port for the test's lifetime.
class FakeServer {
 public:
  FakeServer() {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      const int n = ++requests;
      last_body = req.body;
      last_auth = req.get_header_value("Authorization");
      if (n <= fail_first) {
        res.status = 503;
        return;
      }
      if (status != 200) {
        res.status = status;
        res.set_content("{\"error\": \"bad\"}", "application/json");
        return;
      }
      res.set_content(reply, "application/json");
    });
    port = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeServer() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions"; }

  int port = 0;
  std::atomic<int> requests{0};
  int fail_first = 0;
  int status = 200;
  std::string reply;
  std::string last_body;
  std::string last_auth;

 private:
  httplib::Server server_;
  std::thread thread_;
};

std::string chat_reply(const std::string& content, const std::string& token, double logprob) {
  return json{{"choices",
               json::array({{{"message", {{"role", "assistant"}, {"content", content}}},
                             {"logprobs",
                              {{"content", json::array({{{"token", token}, {"logprob", logprob}}})}}}}})}}
      .dump();
}

}  // namespace

TEST_CASE("remote backend request and response shapes") {
  FakeServer server;
  server.reply = chat_reply("YES", "YES", -0.2);
  ::setenv("INSTSUPP_TEST_KEY", "sekret", 1);
  llm::RemoteBackend backend({server.url(), "llama-2-7b-chat", "INSTSUPP_TEST_KEY", 5});

  auto req = llm::render_prompt("provide information", "Blocks are heavy.", Protocol::PreK);
  auto resp = backend.complete(req);
  CHECK(resp.first_token == "YES");
  REQUIRE(resp.first_token_logprob.has_value());
  CHECK(*resp.first_token_logprob == doctest::Approx(-0.2));
  CHECK(server.last_auth == "Bearer sekret");

  auto body = json::parse(server.last_body);
  CHECK(body["model"] == "llama-2-7b-chat");
  CHECK(body["messages"][0]["role"] == "system");
  CHECK(body["messages"][0]["content"] == "Answer YES or NO.");
  CHECK(body["messages"][1]["content"] == req.user);
  CHECK(body["temperature"].get<double>() == doctest::Approx(0.6));
  CHECK(body["top_p"].get<double>() == doctest::Approx(0.9));
  CHECK(body["logprobs"] == true);
  ::unsetenv("INSTSUPP_TEST_KEY");
}

TEST_CASE("remote backend response variants") {
  auto legacy = llm::RemoteBackend::parse_response(
      R"({"choices": [{"text": " YES.", "logprobs": {"tokens": [" YES"], "token_logprobs": [-0.3]}}]})");
  CHECK(legacy.first_token == " YES");
  CHECK(*legacy.first_token_logprob == doctest::Approx(-0.3));
  CHECK(llm::parse_yes_feature(legacy, llm::FeatureMode::Prob) == doctest::Approx(std::exp(-0.3)));

  auto bare = llm::RemoteBackend::parse_response(R"({"choices": [{"message": {"content": "NO, it does not."}}]})");
  CHECK(bare.first_token == "NO,");
  CHECK_FALSE(bare.first_token_logprob.has_value());

  CHECK_THROWS_AS(llm::RemoteBackend::parse_response("not json"), BackendContract);
  CHECK_THROWS_AS(llm::RemoteBackend::parse_response(R"({"choices": []})"), BackendContract);
}

TEST_CASE("remote backend errors and retries") {
  llm::FeaturizeOptions opts;
  opts.retry.initial_backoff = 1ms;
  const auto set = llm::subset(llm::indicator_set(Protocol::PreK), Dimension::Dim1);
  auto session = testing::make_session("s1", "t1", {"Why?"});

  SUBCASE("server errors are retried") {
    FakeServer server;
    server.reply = chat_reply("YES", "YES", 0.0);
    server.fail_first = 2;
    llm::RemoteBackend backend({server.url(), "m", "", 5});
    opts.retry.attempts = 3;
    auto x = llm::featurize_llm(backend, session, set, opts);
    CHECK(x(0, 0) == 1.0);
  }
  SUBCASE("client errors are contract violations, not retried") {
    FakeServer server;
    server.status = 400;
    llm::RemoteBackend backend({server.url(), "m", "", 5});
    CHECK_THROWS_AS(llm::featurize_llm(backend, session, set, opts), BackendContract);
    CHECK(server.requests == 1);
  }
  SUBCASE("unreachable endpoint exhausts retries") {
    int port = 0;
    {
      FakeServer gone;
      port = gone.port;
    }
    llm::RemoteBackend backend({"http://127.0.0.1:" + std::to_string(port) + "/v1", "m", "", 1});
    CHECK_THROWS_AS(llm::featurize_llm(backend, session, set, opts), RequestFailed);
  }
  SUBCASE("missing logprob in prob mode") {
    FakeServer server;
    server.reply = R"({"choices": [{"message": {"content": "YES"}}]})";
    llm::RemoteBackend backend({server.url(), "m", "", 5});
    CHECK_THROWS_AS(llm::featurize_llm(backend, session, set, opts), BackendContract);
    opts.mode = llm::FeatureMode::Binary;
    CHECK(llm::featurize_llm(backend, session, set, opts).isOnes());
  }
  SUBCASE("explanations come back as text") {
    FakeServer server;
    server.reply = chat_reply("YES. It asks the child to reason.", "YES", -0.1);
    llm::RemoteBackend backend({server.url(), "m", "", 5});
    auto text = llm::explain_indicator(backend, "ask open-ended questions", "Why?", Protocol::PreK);
    CHECK_FALSE(text.empty());
    auto body = json::parse(server.last_body);
    CHECK(body["messages"][0]["content"] == "Answer YES or NO and explain the reasoning.");
  }
}
