#include "instsupp/remote_backend.hpp"

#include <cstdlib>

#include <fmt/format.h>
#include <httplib.h>
#include <json.hpp>

#include "instsupp/errors.hpp"

namespace instsupp::llm {

using nlohmann::json;

RemoteBackend::RemoteBackend(RemoteConfig config) : config_(std::move(config)) {
  const auto& url = config_.endpoint_url;
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw ValidationError(fmt::format("endpoint_url '{}' has no scheme", url));
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    scheme_host_port_ = url;
    path_ = "/";
  } else {
    scheme_host_port_ = url.substr(0, path_start);
    path_ = url.substr(path_start);
  }
}

std::string RemoteBackend::identity() const {
  return fmt::format("remote/{}/{}", config_.endpoint_url, config_.model);
}

std::string RemoteBackend::request_body(const ChatRequest& request) const {
  json body = {{"model", config_.model},
               {"messages",
                json::array({{{"role", "system"}, {"content", request.system}},
                             {{"role", "user"}, {"content", request.user}}})},
               {"temperature", request.temperature},
               {"top_p", request.top_p},
               {"max_tokens", request.max_tokens},
               {"logprobs", request.want_first_token_logprob}};
  return body.dump();
}

ChatResponse RemoteBackend::parse_response(const std::string& body) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error& e) {
    throw BackendContract(fmt::format("response is not JSON (byte {})", e.byte));
  }
  ChatResponse r;
  try {
    const json& choice = doc.at("choices").at(0);
    if (choice.contains("message"))
      r.text = choice.at("message").value("content", std::string());
    else
      r.text = choice.value("text", std::string());

    const json* lp = choice.contains("logprobs") && !choice["logprobs"].is_null()
                         ? &choice["logprobs"]
                         : nullptr;
    if (lp && lp->contains("content") && (*lp)["content"].is_array() &&
        !(*lp)["content"].empty()) {
      const json& first = (*lp)["content"][0];
      r.first_token = first.at("token").get<std::string>();
      r.first_token_logprob = first.at("logprob").get<double>();
    } else if (lp && lp->contains("tokens") && !(*lp)["tokens"].empty()) {
      r.first_token = (*lp)["tokens"][0].get<std::string>();
      r.first_token_logprob = (*lp)["token_logprobs"].at(0).get<double>();
    } else {
      auto start = r.text.find_first_not_of(" \t\r\n");
      auto end = r.text.find_first_of(" \t\r\n", start);
      r.first_token = start == std::string::npos ? "" : r.text.substr(start, end - start);
    }
  } catch (const json::exception& e) {
    throw BackendContract(fmt::format("unexpected response shape: {}", e.what()));
  }
  return r;
}

ChatResponse RemoteBackend::complete(const ChatRequest& request) {
  httplib::Client client(scheme_host_port_);
  client.set_connection_timeout(config_.timeout_s, 0);
  client.set_read_timeout(config_.timeout_s, 0);
  httplib::Headers headers;
  if (!config_.credential_env.empty())
    if (const char* key = std::getenv(config_.credential_env.c_str()); key && *key)
      headers.emplace("Authorization", std::string("Bearer ") + key);

  auto res = client.Post(path_, headers, request_body(request), "application/json");
  if (!res)
    throw TransportError(fmt::format("{}: {}", config_.endpoint_url,
                                     httplib::to_string(res.error())));
  if (res->status == 429 || res->status >= 500)
    throw TransportError(fmt::format("{}: HTTP {}", config_.endpoint_url, res->status));
  if (res->status != 200)
    throw BackendContract(fmt::format("{}: HTTP {}: {}", config_.endpoint_url, res->status,
                                      res->body.substr(0, 200)));
  return parse_response(res->body);
}

}  // namespace instsupp::llm
