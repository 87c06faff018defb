#include "scamguard/service/http.hpp"

#include <httplib.h>

namespace scamguard::service {

namespace {

void send(httplib::Response& res, const Reply& r) {
  res.status = r.status;
  res.set_content(r.body, "application/json");
}

}  // namespace

HttpServer::HttpServer(DetectionService& service) : service_(service), server_(std::make_unique<httplib::Server>()) {
  auto& s = *server_;
  s.set_payload_max_length(kMaxBodyBytes);

  s.Post("/v1/calls/feedback", [this](const httplib::Request& req, httplib::Response& res) {
    send(res, service_.call_feedback(req.body));
  });
  s.Get(R"(/v1/numbers/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    send(res, service_.number_lookup(req.matches[1].str()));
  });
  s.Post("/v1/ads/submit", [this](const httplib::Request& req, httplib::Response& res) {
    send(res, service_.submit_ad(req.body));
  });
  s.Get(R"(/v1/ads/report/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    send(res, service_.ad_report(req.matches[1].str()));
  });
  s.Get("/v1/model/version", [this](const httplib::Request&, httplib::Response& res) {
    send(res, service_.model_version());
  });
  s.Post("/v1/model/activate", [this](const httplib::Request& req, httplib::Response& res) {
    send(res, service_.activate(req.body));
  });
  s.Get("/v1/client/defense", [this](const httplib::Request& req, httplib::Response& res) {
    std::optional<std::size_t> n;
    if (req.has_param("n")) {
      try {
        std::size_t used = 0;
        const auto text = req.get_param_value("n");
        const auto v = std::stoull(text, &used);
        if (used != text.size()) throw std::invalid_argument("n");
        n = static_cast<std::size_t>(v);
      } catch (const std::exception&) {
        send(res, {400, R"({"error":"InvalidValue","message":"n must be a non-negative integer"})"});
        return;
      }
    }
    send(res, service_.client_defense(n));
  });

  s.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string msg = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      msg = e.what();
    } catch (...) {
    }
    send(res, {500, Json{{"error", "Internal"}, {"message", msg}}.dump()});
  });
  s.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return;
    const char* kind = res.status == 413 ? "PayloadTooLarge" : res.status == 404 ? "NotFound" : "HttpError";
    res.set_content(Json{{"error", kind}, {"status", res.status}}.dump(), "application/json");
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  const int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(ErrorKind::Io, "cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void HttpServer::listen() { server_->listen_after_bind(); }

int HttpServer::start(const std::string& host, int port) {
  const int bound = bind(host, port);
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return bound;
}

void HttpServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace scamguard::service
