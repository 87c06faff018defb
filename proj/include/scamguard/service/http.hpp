#pragma once

#include <memory>
#include <string>
#include <thread>

#include "scamguard/service/service.hpp"

namespace httplib {
class Server;
}

namespace scamguard::service {

inline constexpr std::size_t kMaxBodyBytes = 1 << 20;

/// HTTP/1.1 front end over a DetectionService. Bodies above 1 MiB get 413.
class HttpServer {
 public:
  explicit HttpServer(DetectionService& service);
  ~HttpServer();

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds (port 0 picks a free port) and returns the bound port.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  void listen();
  /// bind + listen on a background thread; waits until ready.
  int start(const std::string& host, int port);
  void stop();

 private:
  DetectionService& service_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

}  // namespace scamguard::service
