#pragma once

#include <chrono>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace codekg::http {

struct Request {
  std::string method = "GET";
  std::string url;
  std::string body;
  std::string content_type = "application/json";
  std::vector<std::pair<std::string, std::string>> headers;
  std::chrono::seconds timeout{120};
};

struct Response {
  int status = 0;
  std::string body;
};

// Performs one request. Throws NetworkError when no HTTP response arrives
// (DNS failure, refused connection, timeout). HTTP error statuses are returned,
// not thrown.
Response send(const Request& request);

// Injection point for tests and offline replay.
using Transport = std::function<Response(const Request&)>;

Transport default_transport();

std::string url_encode(std::string_view value);

}  // namespace codekg::http
