#pragma once

#include <chrono>
#include <string>

#include "lts/labelers.hpp"

namespace lts {

struct HttpEndpointConfig {
  /// Full URL of a chat-completions route, e.g. https://host/v1/chat/completions.
  std::string url;
  std::string model;
  std::string api_key;
  std::chrono::seconds timeout{30};
};

/// Environment variable holding the bearer token.
inline constexpr const char* kApiKeyEnv = "LTS_LLM_API_KEY";

/// Request body: {"model", "messages": [{"role": "user", "content": prompt}], "temperature": 0}.
std::string build_chat_request(const std::string& model, const std::string& prompt);

/// Pulls choices[0].message.content (or choices[0].text). Throws TransportError
/// on a body that does not have that shape.
std::string extract_completion(const std::string& body);

// Blocking HTTP(S) client; a fresh connection per call so instances can be
// shared across labeling threads.
class HttpCompletionEndpoint final : public CompletionEndpoint {
 public:
  explicit HttpCompletionEndpoint(HttpEndpointConfig cfg);
  std::string complete(const std::string& prompt) override;

 private:
  HttpEndpointConfig cfg_;
  std::string origin_;  // scheme://host[:port]
  std::string path_;
};

}  // namespace lts
