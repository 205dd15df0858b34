#pragma once

#include <functional>
#include <map>
#include <memory>
#include <shared_mutex>
#include <string>

#include "adore/util.hpp"

// Request/response plumbing between services. Every service addresses its
// peers by base URL; this keeps the in-process wiring used by tests and the
// HTTP wiring used by `serve` interchangeable.
namespace adore {

struct Response {
  int status = 200;
  std::string content_type = "text/xml; charset=UTF-8";
  std::string body;
};

using Handler = std::function<Response(const QueryParams&)>;

class Transport {
 public:
  virtual ~Transport() = default;
  // Throws Error(kTransportFailure) when the peer cannot be reached.
  virtual Response get(const std::string& base_url, const QueryParams& params) = 0;
};

// Routes on the exact base URL string, so symbolic addresses such as
// `BaseURL(3)` work as well as real URLs.
class InProcessTransport : public Transport {
 public:
  void route(const std::string& base_url, Handler handler);
  void unroute(const std::string& base_url);
  bool has_route(const std::string& base_url) const;
  Response get(const std::string& base_url, const QueryParams& params) override;

 private:
  mutable std::shared_mutex mu_;
  std::map<std::string, Handler> routes_;
};

// Blocking HTTP/1.1 GET client.
class HttpTransport : public Transport {
 public:
  explicit HttpTransport(int timeout_seconds = 30) : timeout_(timeout_seconds) {}
  Response get(const std::string& base_url, const QueryParams& params) override;

 private:
  int timeout_;
};

// In-process routes first, everything else over HTTP.
class RoutingTransport : public Transport {
 public:
  RoutingTransport(InProcessTransport& local, Transport& remote)
      : local_(local), remote_(remote) {}
  Response get(const std::string& base_url, const QueryParams& params) override;

 private:
  InProcessTransport& local_;
  Transport& remote_;
};

// Minimal threaded HTTP server: each path maps to one handler that receives
// the decoded query.
class HttpServer {
 public:
  HttpServer();
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  void route(const std::string& path, Handler handler);
  // Binds and serves until stop(); throws Error(kIoFailure) if binding fails.
  void listen(const std::string& host, int port);
  // Binds (port 0 picks a free one), then serves on a background thread.
  // Returns the bound port.
  int start(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct UrlParts {
  std::string scheme;
  std::string host;
  int port = 80;
  std::string path;  // starts with '/'
};
// Throws Error(kInvalidArgument) for anything but http URLs.
UrlParts parse_http_url(const std::string& url);

}  // namespace adore
