#pragma once

#include <string>

#include "instsupp/llm.hpp"

namespace instsupp::llm {

struct RemoteConfig {
  /// Full URL of the chat-completions endpoint, e.g.
  /// http://localhost:8000/v1/chat/completions
  std::string endpoint_url;
  std::string model = "llama-2-7b-chat";
  /// Name of the environment variable holding the bearer token; empty for none.
  std::string credential_env = "INSTSUPP_API_KEY";
  int timeout_s = 60;
};

/// Client for an OpenAI-style chat-completions server. Requests logprobs
/// for the generated tokens and reads the first one. Connection failures,
/// HTTP 429 and 5xx raise TransportError; other non-200 statuses and
/// malformed bodies raise BackendContract.
class RemoteBackend final : public ChatBackend {
 public:
  explicit RemoteBackend(RemoteConfig config);
  ChatResponse complete(const ChatRequest& request) override;
  std::string identity() const override;

  /// Request body as sent on the wire.
  std::string request_body(const ChatRequest& request) const;
  static ChatResponse parse_response(const std::string& body);

 private:
  RemoteConfig config_;
  std::string scheme_host_port_;
  std::string path_;
};

}  // namespace instsupp::llm
