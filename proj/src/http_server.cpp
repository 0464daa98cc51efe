#include "emotionpush/http_server.hpp"

#include <atomic>
#include <charconv>
#include <cstdlib>
#include <regex>

#include "httplib.h"

namespace emotionpush::service {
namespace {

using json = nlohmann::ordered_json;

constexpr auto kStreamSlice = std::chrono::milliseconds(200);

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump() + "\n", "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, json{{"error", message}});
}

nlohmann::json parse_body(const httplib::Request& req) {
  auto doc = nlohmann::json::parse(req.body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw InvalidArgument("request body must be a JSON object");
  }
  return doc;
}

std::string string_field(const nlohmann::json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end() || !it->is_string()) {
    throw InvalidArgument(std::string("field '") + key + "' must be a string");
  }
  return it->get<std::string>();
}

std::uint64_t parse_u64(const std::string& text, const char* what) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw InvalidArgument(std::string("query parameter '") + what + "' must be a non-negative integer");
  }
  return v;
}

json post_json(const PostResult& r) {
  return json{{"message_id", r.message_id}, {"emotion", r.emotion}, {"color", r.color}};
}

json phase_json(const PhaseConfig& p) {
  return json{{"color_feedback", p.color_feedback}, {"phase_label", p.phase_label}};
}

// Runs a handler, mapping library errors onto status codes.
template <class F>
httplib::Server::Handler guarded(F fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const ModelUnavailable& e) {
      send_error(res, 503, e.what());
    } catch (const NotFound& e) {
      send_error(res, 404, e.what());
    } catch (const InvalidArgument& e) {
      send_error(res, 400, e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, e.what());
    }
  };
}

}  // namespace

int port_from_env() {
  const char* raw = std::getenv("EMOTIONPUSH_PORT");
  if (raw == nullptr || *raw == '\0') return kDefaultPort;
  std::string text(raw);
  int port = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), port);
  if (ec != std::errc() || ptr != text.data() + text.size() || port < 0 || port > 65535) {
    throw InvalidArgument("EMOTIONPUSH_PORT must be a port number, got '" + text + "'");
  }
  return port;
}

HttpServer::HttpServer(MessageService& service, HttpOptions options)
    : service_(service), options_(options), server_(std::make_unique<httplib::Server>()) {
  const std::size_t workers = std::max<std::size_t>(options_.worker_threads, 2);
  server_->new_task_queue = [workers] { return new httplib::ThreadPool(workers); };
  install_routes();
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = server_->bind_to_any_port(host);
    if (bound < 0) throw Error("cannot bind " + host);
    return bound;
  }
  if (!server_->bind_to_port(host, port)) {
    throw Error("cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void HttpServer::run() { server_->listen_after_bind(); }

void HttpServer::stop() {
  stopping_->store(true);
  if (server_ && server_->is_running()) server_->stop();
}

void HttpServer::install_routes() {
  auto& svr = *server_;
  MessageService& svc = service_;
  const HttpOptions opts = options_;
  auto stopping = stopping_;

  svr.Post("/v1/classify", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
             const auto body = parse_body(req);
             const auto text = string_field(body, "text");
             send_json(res, 200, ensemble::to_json(svc.classify(text)));
           }));

  svr.Post("/v1/messages", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
             const auto body = parse_body(req);
             const auto r = svc.post_message(string_field(body, "sender"), string_field(body, "receiver"),
                                             string_field(body, "text"));
             send_json(res, 200, post_json(r));
           }));

  svr.Get(R"(/v1/messages/([^/]+))", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
            const std::string id = req.matches[1];
            auto m = svc.message(id);
            if (!m) throw NotFound("unknown message id '" + id + "'");
            send_json(res, 200, m->to_json());
          }));

  svr.Post(R"(/v1/messages/([^/]+)/read)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
             const std::string id = req.matches[1];
             svc.mark_read(id);
             send_json(res, 200, svc.message(id)->to_json());
           }));

  svr.Post(R"(/v1/messages/([^/]+)/respond)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
             const std::string id = req.matches[1];
             if (!svc.message(id)) throw NotFound("unknown message id '" + id + "'");
             const auto body = parse_body(req);
             const auto r = svc.respond(id, string_field(body, "text"));
             json out = post_json(r);
             out["in_reply_to"] = id;
             out["message"] = svc.message(id)->to_json();
             send_json(res, 200, out);
           }));

  svr.Get("/v1/metrics/latency", guarded([&svc](const httplib::Request&, httplib::Response& res) {
            send_json(res, 200, svc.latency_report().to_json());
          }));

  svr.Get("/v1/config/phase", guarded([&svc](const httplib::Request&, httplib::Response& res) {
            send_json(res, 200, phase_json(svc.phase()));
          }));

  svr.Put("/v1/config/phase", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
            const auto body = parse_body(req);
            auto cf = body.find("color_feedback");
            if (cf == body.end() || !cf->is_boolean()) {
              throw InvalidArgument("field 'color_feedback' must be a boolean");
            }
            PhaseConfig p;
            p.color_feedback = cf->get<bool>();
            p.phase_label = string_field(body, "phase_label");
            svc.set_phase(p);
            send_json(res, 200, phase_json(svc.phase()));
          }));

  svr.Get("/v1/subscribe", guarded([&svc, opts, stopping](const httplib::Request& req, httplib::Response& res) {
            const std::string user = req.get_param_value("user");
            if (user.empty()) throw InvalidArgument("query parameter 'user' is required");

            if (req.get_param_value("mode") == "poll") {
              std::uint64_t after = 0;
              if (req.has_param("after")) after = parse_u64(req.get_param_value("after"), "after");
              auto timeout = std::chrono::milliseconds(0);
              if (req.has_param("timeout_ms")) {
                timeout = std::chrono::milliseconds(parse_u64(req.get_param_value("timeout_ms"), "timeout_ms"));
              }
              timeout = std::min(timeout, opts.max_poll);
              json events = json::array();
              for (const auto& ev : svc.wait_events(user, after, timeout)) events.push_back(ev.to_json());
              send_json(res, 200, json{{"events", std::move(events)}});
              return;
            }

            // NDJSON stream. Each connection starts from the oldest
            // unacknowledged event, so a reconnect replays what was missed.
            auto sent = std::make_shared<std::uint64_t>(0);
            auto idle = std::make_shared<std::chrono::milliseconds>(0);
            res.set_chunked_content_provider(
                "application/x-ndjson", [&svc, opts, stopping, user, sent, idle](std::size_t, httplib::DataSink& sink) {
                  if (stopping->load() || svc.is_shut_down()) {
                    sink.done();
                    return true;
                  }
                  const auto slice = std::min(kStreamSlice, opts.keepalive);
                  auto events = svc.wait_events(user, *sent, slice);
                  if (events.empty()) {
                    *idle += slice;
                    if (*idle >= opts.keepalive) {
                      *idle = std::chrono::milliseconds(0);
                      if (!sink.write("\n", 1)) return false;
                    }
                    return sink.is_writable();
                  }
                  *idle = std::chrono::milliseconds(0);
                  std::string chunk;
                  for (const auto& ev : events) {
                    chunk += ev.to_json().dump();
                    chunk += '\n';
                    *sent = ev.seq;
                  }
                  return sink.write(chunk.data(), chunk.size());
                });
          }));
}

}  // namespace emotionpush::service
