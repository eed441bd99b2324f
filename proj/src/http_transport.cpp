#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <json.hpp>

#include "crg/extractor.hpp"

namespace crg {

namespace {

struct Url {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Url split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw TransportError("endpoint is not an absolute URL: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

std::string HttpTransport::post(const TransportRequest& request) {
  const auto url = split_url(request.url);
  httplib::Client client(url.origin);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(request.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(request.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  httplib::Headers headers;
  std::string content_type = "application/json";
  for (const auto& [k, v] : request.headers) {
    if (k == "Content-Type") {
      content_type = v;
    } else {
      headers.emplace(k, v);
    }
  }
  auto res = client.Post(url.path, headers, request.body, content_type);
  if (!res) throw TransportError("POST " + request.url + " failed: " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300) {
    throw TransportError("POST " + request.url + " returned HTTP " + std::to_string(res->status));
  }

  auto body = nlohmann::json::parse(res->body, nullptr, false);
  if (!body.is_discarded() && body.is_object() && body.contains("choices")) {
    const auto& choices = body["choices"];
    if (choices.is_array() && !choices.empty() && choices[0].contains("message") &&
        choices[0]["message"].contains("content") && choices[0]["message"]["content"].is_string()) {
      return choices[0]["message"]["content"].get<std::string>();
    }
  }
  return res->body;
}

}  // namespace crg
