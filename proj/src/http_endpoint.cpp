#include "lts/http_endpoint.hpp"

#include <httplib.h>

#include <nlohmann/json.hpp>

#include "lts/errors.hpp"

namespace lts {

using nlohmann::json;

std::string build_chat_request(const std::string& model, const std::string& prompt) {
  json j;
  j["model"] = model;
  j["messages"] = json::array({json{{"role", "user"}, {"content", prompt}}});
  j["temperature"] = 0;
  return j.dump();
}

std::string extract_completion(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    throw TransportError(std::string("completion response is not JSON: ") + e.what());
  }
  try {
    const auto& choice = j.at("choices").at(0);
    if (choice.contains("message")) return choice.at("message").at("content").get<std::string>();
    return choice.at("text").get<std::string>();
  } catch (const json::exception& e) {
    throw TransportError(std::string("unexpected completion response shape: ") + e.what());
  }
}

HttpCompletionEndpoint::HttpCompletionEndpoint(HttpEndpointConfig cfg) : cfg_(std::move(cfg)) {
  const auto scheme_end = cfg_.url.find("://");
  if (scheme_end == std::string::npos) throw ValidationError("endpoint URL needs a scheme: " + cfg_.url);
  const auto scheme = cfg_.url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") throw ValidationError("endpoint URL scheme must be http or https");
  const auto path_start = cfg_.url.find('/', scheme_end + 3);
  origin_ = cfg_.url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : cfg_.url.substr(path_start);
  if (origin_.size() <= scheme_end + 3) throw ValidationError("endpoint URL has no host: " + cfg_.url);
}

std::string HttpCompletionEndpoint::complete(const std::string& prompt) {
  httplib::Client client(origin_);
  const auto secs = static_cast<time_t>(cfg_.timeout.count());
  client.set_connection_timeout(secs, 0);
  client.set_read_timeout(secs, 0);
  client.set_write_timeout(secs, 0);
  httplib::Headers headers;
  if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);
  auto res = client.Post(path_, headers, build_chat_request(cfg_.model, prompt), "application/json");
  if (!res) throw TransportError("request to " + cfg_.url + " failed: " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300) {
    throw TransportError("endpoint returned HTTP " + std::to_string(res->status));
  }
  return extract_completion(res->body);
}

}  // namespace lts
