#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "codekg/error.hpp"
#include "codekg/http.hpp"

namespace codekg::http {

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // /path?query
};

SplitUrl split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw NetworkError("malformed URL: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

Response send(const Request& request) {
  auto parts = split_url(request.url);
  httplib::Client client(parts.origin);
  client.set_connection_timeout(request.timeout);
  client.set_read_timeout(request.timeout);
  client.set_write_timeout(request.timeout);
  client.set_follow_location(true);

  httplib::Headers headers;
  for (const auto& [k, v] : request.headers) headers.emplace(k, v);

  httplib::Result result;
  if (request.method == "POST") {
    result = client.Post(parts.path, headers, request.body, request.content_type);
  } else {
    result = client.Get(parts.path, headers);
  }
  if (!result) {
    throw NetworkError("request to " + parts.origin + " failed: " +
                       httplib::to_string(result.error()));
  }
  return Response{result->status, result->body};
}

Transport default_transport() { return [](const Request& r) { return send(r); }; }

std::string url_encode(std::string_view value) {
  return httplib::detail::encode_query_param(std::string(value));
}

}  // namespace codekg::http
