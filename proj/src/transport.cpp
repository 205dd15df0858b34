#include "adore/transport.hpp"

#include <httplib.h>

#include <mutex>
#include <thread>

#include "adore/error.hpp"

namespace adore {

void InProcessTransport::route(const std::string& base_url, Handler handler) {
  std::unique_lock lock(mu_);
  routes_[base_url] = std::move(handler);
}

void InProcessTransport::unroute(const std::string& base_url) {
  std::unique_lock lock(mu_);
  routes_.erase(base_url);
}

bool InProcessTransport::has_route(const std::string& base_url) const {
  std::shared_lock lock(mu_);
  return routes_.count(base_url) != 0;
}

Response InProcessTransport::get(const std::string& base_url, const QueryParams& params) {
  Handler handler;
  {
    std::shared_lock lock(mu_);
    auto it = routes_.find(base_url);
    if (it == routes_.end())
      throw Error(Errc::kTransportFailure, "no service at " + base_url);
    handler = it->second;
  }
  return handler(params);
}

UrlParts parse_http_url(const std::string& url) {
  UrlParts p;
  constexpr std::string_view kScheme = "http://";
  if (!url.starts_with(kScheme))
    throw Error(Errc::kInvalidArgument, "not an http URL: " + url);
  p.scheme = "http";
  std::string rest = url.substr(kScheme.size());
  size_t slash = rest.find('/');
  std::string authority = rest.substr(0, slash);
  p.path = slash == std::string::npos ? "/" : rest.substr(slash);
  size_t colon = authority.rfind(':');
  if (colon != std::string::npos) {
    p.host = authority.substr(0, colon);
    try {
      p.port = std::stoi(authority.substr(colon + 1));
    } catch (const std::exception&) {
      throw Error(Errc::kInvalidArgument, "bad port in " + url);
    }
  } else {
    p.host = authority;
  }
  if (p.host.empty()) throw Error(Errc::kInvalidArgument, "no host in " + url);
  return p;
}

Response HttpTransport::get(const std::string& base_url, const QueryParams& params) {
  UrlParts u = parse_http_url(base_url);
  httplib::Client client(u.host, u.port);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  std::string target = u.path;
  if (!params.empty()) target += (target.find('?') == std::string::npos ? "?" : "&") + build_query(params);
  auto res = client.Get(target);
  if (!res)
    throw Error(Errc::kTransportFailure,
                base_url + ": " + httplib::to_string(res.error()));
  Response out;
  out.status = res->status;
  out.content_type = res->get_header_value("Content-Type");
  out.body = std::move(res->body);
  return out;
}

Response RoutingTransport::get(const std::string& base_url, const QueryParams& params) {
  if (local_.has_route(base_url)) return local_.get(base_url, params);
  return remote_.get(base_url, params);
}

struct HttpServer::Impl {
  httplib::Server server;
  std::mutex mu;
  std::map<std::string, Handler> routes;
  std::thread thread;
};

HttpServer::HttpServer() : impl_(std::make_unique<Impl>()) {
  impl_->server.Get(".*", [this](const httplib::Request& req, httplib::Response& res) {
    Handler handler;
    {
      std::lock_guard lock(impl_->mu);
      auto it = impl_->routes.find(req.path);
      if (it != impl_->routes.end()) handler = it->second;
    }
    if (!handler) {
      res.status = 404;
      res.set_content("no service at " + req.path + "\n", "text/plain");
      return;
    }
    size_t q = req.target.find('?');
    QueryParams params =
        q == std::string::npos ? QueryParams{} : parse_query(req.target.substr(q + 1));
    Response out;
    try {
      out = handler(params);
    } catch (const Error& e) {
      out.status = e.code() == Errc::kUpstreamUnavailable ? 503 : 500;
      out.content_type = "text/plain";
      out.body = std::string(e.what()) + "\n";
    } catch (const std::exception& e) {
      out.status = 500;
      out.content_type = "text/plain";
      out.body = std::string(e.what()) + "\n";
    }
    res.status = out.status;
    res.set_content(out.body, out.content_type);
  });
}

HttpServer::~HttpServer() { stop(); }

void HttpServer::route(const std::string& path, Handler handler) {
  std::lock_guard lock(impl_->mu);
  impl_->routes[path] = std::move(handler);
}

void HttpServer::listen(const std::string& host, int port) {
  if (!impl_->server.bind_to_port(host, port))
    throw Error(Errc::kIoFailure, "cannot bind " + host + ":" + std::to_string(port));
  impl_->server.listen_after_bind();
}

int HttpServer::start(const std::string& host, int port) {
  int bound = port == 0 ? impl_->server.bind_to_any_port(host)
                        : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0)
    throw Error(Errc::kIoFailure, "cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void HttpServer::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace adore
