#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <string>

#include "emotionpush/service.hpp"

namespace httplib {
class Server;
}

namespace emotionpush::service {

inline constexpr int kDefaultPort = 8087;

// Port from EMOTIONPUSH_PORT, falling back to 8087. Throws InvalidArgument
// on a malformed value.
int port_from_env();

struct HttpOptions {
  std::size_t worker_threads = 32;  // streams hold a worker each
  std::chrono::milliseconds keepalive{5000};
  std::chrono::milliseconds max_poll{60000};
};

// HTTP/JSON front end over a MessageService:
//   POST /v1/classify, POST /v1/messages, GET /v1/messages/{id},
//   POST /v1/messages/{id}/read, POST /v1/messages/{id}/respond,
//   GET /v1/subscribe?user=U[&mode=poll&after=N&timeout_ms=T],
//   GET /v1/metrics/latency, GET|PUT /v1/config/phase
class HttpServer {
 public:
  explicit HttpServer(MessageService& service, HttpOptions options = {});
  ~HttpServer();

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds; port 0 picks a free port. Returns the bound port or throws.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void run();
  void stop();

 private:
  void install_routes();

  MessageService& service_;
  HttpOptions options_;
  std::shared_ptr<std::atomic<bool>> stopping_ = std::make_shared<std::atomic<bool>>(false);
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace emotionpush::service
