#include <cstdlib>

#include <httplib.h>
#include <json.hpp>

#include "atlas/annotator.hpp"

namespace atlas {

RemoteAnnotator::RemoteAnnotator(std::string url, std::string api_key,
                                 std::chrono::seconds timeout)
    : url_(std::move(url)), api_key_(std::move(api_key)), timeout_(timeout) {
  const auto scheme_end = url_.find("://");
  if (scheme_end == std::string::npos) {
    throw ConfigError("annotator URL must include a scheme: " + url_);
  }
  const auto path_start = url_.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    scheme_host_port_ = url_;
    path_ = "/";
  } else {
    scheme_host_port_ = url_.substr(0, path_start);
    path_ = url_.substr(path_start);
  }
}

RemoteAnnotator RemoteAnnotator::from_environment() {
  const char* url = std::getenv(kUrlEnv);
  if (url == nullptr || *url == '\0') {
    throw ConfigError(std::string(kUrlEnv) + " is not set");
  }
  const char* key = std::getenv(kKeyEnv);
  return RemoteAnnotator(url, key == nullptr ? "" : key);
}

std::string RemoteAnnotator::annotate(const AnnotationRequest& request) {
  httplib::Client client(scheme_host_port_);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  client.set_write_timeout(timeout_);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  const nlohmann::json body{{"purpose", request.purpose},
                            {"key", request.key},
                            {"prompt", request.prompt},
                            {"subject", request.subject}};
  auto res = client.Post(path_, headers, body.dump(), "application/json");
  if (!res) {
    throw TransportError("request to " + url_ + " failed: " + httplib::to_string(res.error()));
  }
  if (res->status == 429 || res->status >= 500) {
    throw TransportError("annotator endpoint returned HTTP " + std::to_string(res->status));
  }
  if (res->status < 200 || res->status >= 300) {
    throw AnnotatorError("annotator endpoint returned HTTP " + std::to_string(res->status));
  }
  const auto parsed = nlohmann::json::parse(res->body, nullptr, false);
  if (!parsed.is_discarded() && parsed.is_object() && parsed.contains("output") &&
      parsed["output"].is_string()) {
    return parsed["output"].get<std::string>();
  }
  return res->body;
}

}  // namespace atlas
