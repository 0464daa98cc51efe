#include <atomic>
#include <fstream>
#include <thread>

#include <httplib.h>

#include "doctest.h"
#include "emotionpush/http_server.hpp"
#include "emotionpush/service.hpp"
#include "fixtures.hpp"

using namespace emotionpush;
using namespace emotionpush::service;
using json = nlohmann::json;

namespace {

struct FakeClock {
  std::shared_ptr<std::atomic<std::int64_t>> t = std::make_shared<std::atomic<std::int64_t>>(1'000'000);
  Clock clock() const {
    auto p = t;
    return [p] { return p->load(); };
  }
  void advance(std::int64_t ms) { *t += ms; }
};

// Service plus an HTTP server on an ephemeral port.
struct Server {
  MessageService& svc;
  HttpServer http;
  int port;
  std::thread thread;

  Server(MessageService& s, HttpOptions opts = {})
      : svc(s), http(s, opts), port(http.bind("127.0.0.1", 0)), thread([this] { http.run(); }) {}
  ~Server() {
    http.stop();
    thread.join();
  }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(10, 0);
    return c;
  }
};

json body_of(const httplib::Result& r) {
  REQUIRE(r);
  return json::parse(r->body);
}

json post(httplib::Client& c, const std::string& path, const json& body) {
  return body_of(c.Post(path, body.dump(), "application/json"));
}

std::size_t count_lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) n += !line.empty();
  return n;
}

}  // namespace

TEST_CASE("preview keeps whole UTF-8 characters") {
  CHECK(make_preview("short") == "short");
  const std::string a(100, 'a');
  CHECK(make_preview(a).size() == kPreviewChars);
  std::string e;
  for (int i = 0; i < 90; ++i) e += "\xC3\xA9";
  CHECK(make_preview(e).size() == 2 * kPreviewChars);
}

TEST_CASE("post, read and respond with a fake clock") {
  FakeClock fc;
  MessageService svc(fixtures::coarse_model(), std::nullopt, fc.clock());
  const auto r = svc.post_message("alice", "bob", "hello there");
  CHECK(r.message_id == "m1");
  CHECK(r.color == color_of(fixtures::coarse_model()->ensemble.config.colors, r.emotion));

  fc.advance(250);
  CHECK(svc.mark_read("m1") == 1'000'250);
  fc.advance(100);
  CHECK(svc.mark_read("m1") == 1'000'250);  // first write wins

  fc.advance(50);
  const auto reply = svc.respond("m1", "hi back");
  CHECK(reply.message_id == "m2");
  const auto m1 = *svc.message("m1");
  CHECK(*m1.responded_at == 1'000'400);
  const auto m2 = *svc.message("m2");
  CHECK(m2.sender == "bob");
  CHECK(m2.receiver == "alice");
  CHECK(*m2.in_reply_to == "m1");

  fc.advance(10);
  svc.respond("m1", "again");
  CHECK(*svc.message("m1")->responded_at == 1'000'400);
  CHECK(svc.messages().size() == 3);  // each respond posts a reply

  CHECK_THROWS_AS(svc.mark_read("m99"), NotFound);
  CHECK_THROWS_AS(svc.respond("m99", "x"), NotFound);
  CHECK_THROWS_AS(svc.respond("m1", ""), InvalidArgument);
  CHECK_THROWS_AS(svc.post_message("", "bob", "x"), InvalidArgument);
  CHECK_THROWS_AS(svc.set_phase(PhaseConfig{true, ""}), InvalidArgument);
}

TEST_CASE("respond before read sets read_at too") {
  FakeClock fc;
  MessageService svc(fixtures::coarse_model(), std::nullopt, fc.clock());
  svc.post_message("a", "b", "x");
  fc.advance(40);
  svc.respond("m1", "y");
  const auto m = *svc.message("m1");
  CHECK(*m.read_at == 1'000'040);
  CHECK(*m.responded_at == 1'000'040);
}

TEST_CASE("no model: classification paths raise ModelUnavailable") {
  MessageService svc(nullptr, std::nullopt);
  CHECK_FALSE(svc.has_model());
  CHECK_THROWS_AS(svc.classify("x"), ModelUnavailable);
  CHECK_THROWS_AS(svc.post_message("a", "b", "x"), ModelUnavailable);
  CHECK(svc.phase() == PhaseConfig{});
}

TEST_CASE("color feedback off: notification hides emotion, message keeps it") {
  MessageService svc(fixtures::coarse_model(), std::nullopt);
  svc.set_phase(PhaseConfig{false, "off"});
  const auto r = svc.post_message("a", "b", "some words here");
  const auto events = svc.pending_events("b");
  REQUIRE(events.size() == 1);
  CHECK_FALSE(events[0].emotion.has_value());
  const auto ev = events[0].to_json();
  CHECK(ev["color"].is_null());
  CHECK_FALSE(ev.contains("emotion"));
  const auto m = *svc.message(r.message_id);
  CHECK(m.emotion == r.emotion);
  CHECK(m.phase == "off");
  CHECK_FALSE(m.color_feedback);

  svc.set_phase(PhaseConfig{true, "on"});
  svc.post_message("a", "b", "more words");
  const auto on = svc.pending_events("b");
  REQUIRE(on.size() == 2);
  CHECK(on[1].emotion.has_value());
  CHECK(on[1].to_json()["color"].is_string());
}

TEST_CASE("events: per-receiver FIFO, acknowledged on read") {
  MessageService svc(fixtures::coarse_model(), std::nullopt);
  for (int i = 0; i < 5; ++i) svc.post_message("a", "b", "msg " + std::to_string(i));
  svc.post_message("b", "a", "other way");
  auto evs = svc.pending_events("b");
  REQUIRE(evs.size() == 5);
  for (std::size_t i = 0; i < evs.size(); ++i) {
    CHECK(evs[i].seq == i + 1);
    CHECK(evs[i].message_id == "m" + std::to_string(i + 1));
  }
  CHECK(svc.pending_events("b", 3).size() == 2);
  CHECK(svc.pending_events("a").size() == 1);
  svc.mark_read("m2");
  evs = svc.pending_events("b");
  CHECK(evs.size() == 4);
  CHECK(evs[1].message_id == "m3");
  CHECK(svc.pending_events("nobody").empty());
  CHECK(svc.wait_events("nobody", 0, std::chrono::milliseconds(20)).empty());
}

namespace {

// Three messages per phase with fixed read latencies; responses take twice as long.
void latency_fixture(MessageService& svc, FakeClock& fc, const std::string& text) {
  const std::vector<std::pair<std::string, std::vector<int>>> plan{{"off", {100, 200, 300}}, {"on", {10, 20, 30}}};
  for (const auto& [phase, lats] : plan) {
    svc.set_phase(PhaseConfig{phase == "on", phase});
    for (int lat : lats) {
      const auto id = svc.post_message("a", "b", text).message_id;
      fc.advance(lat);
      svc.mark_read(id);
      fc.advance(lat * 2);
      svc.respond(id, text);
      fc.advance(1000);
    }
  }
}

}  // namespace

TEST_CASE("latency report over two phases, replayed after restart") {
  fixtures::TempDir dir;
  const auto log = dir / "events.jsonl";
  FakeClock fc;
  const auto model = fixtures::coarse_model();
  // the report is keyed by whatever emotion the model assigns this text
  const std::string text = "grr sig1_1 sig1_2";
  const auto emotion = ensemble::classify(model->ensemble, model->table, text).coarse;

  nlohmann::ordered_json before;
  {
    MessageService svc(model, log, fc.clock());
    latency_fixture(svc, fc, text);
    before = svc.latency_report().to_json();
  }
  CHECK(before["test"] == "mann-whitney-u, two-sided");
  CHECK(before["phases"] == nlohmann::ordered_json::array({"off", "on"}));
  const auto& e = before["emotions"][emotion];
  CHECK(e["phases"]["off"]["n_read"] == 3);
  CHECK(e["phases"]["off"]["mean_read_latency_ms"] == 200.0);
  CHECK(e["phases"]["on"]["mean_read_latency_ms"] == 20.0);
  CHECK(e["phases"]["off"]["mean_response_latency_ms"] == 400.0);
  CHECK(e["read_p_value"] == 0.1);
  CHECK(e["response_p_value"] == 0.1);
  CHECK(before["emotions"].size() == model->ensemble.labels.size());

  MessageService again(model, log, fc.clock());
  CHECK(again.latency_report().to_json() == before);
  CHECK(again.messages().size() == 12);
  CHECK(again.phase() == PhaseConfig{true, "on"});

  SUBCASE("torn final line is dropped") {
    const auto lines = count_lines(log);
    { std::ofstream(log, std::ios::app) << R"({"v":1,"type":"read","id":"m)"; }
    MessageService torn(model, log, fc.clock());
    CHECK(torn.latency_report().to_json() == before);
    CHECK(count_lines(log) == lines);
    torn.post_message("a", "b", "after");
    CHECK(count_lines(log) == lines + 1);
  }
  SUBCASE("malformed middle line is an error") {
    std::ifstream in(log);
    std::string all((std::istreambuf_iterator<char>(in)), {});
    in.close();
    all.insert(all.find('\n') + 1, "{not json}\n");
    std::ofstream(log, std::ios::trunc) << all;
    CHECK_THROWS_AS(MessageService(model, log, fc.clock()), ParseError);
  }
  SUBCASE("unknown log version is an error") {
    { std::ofstream(log, std::ios::app) << R"({"v":9,"type":"phase","color_feedback":true,"phase_label":"x"})" << "\n"; }
    CHECK_THROWS(MessageService(model, log, fc.clock()));
  }
}

TEST_CASE("latency: one phase gives null p-values") {
  FakeClock fc;
  MessageService svc(fixtures::coarse_model(), std::nullopt, fc.clock());
  svc.post_message("a", "b", "x");
  fc.advance(5);
  svc.mark_read("m1");
  const auto doc = svc.latency_report().to_json();
  for (const auto& [emo, e] : doc["emotions"].items()) {
    CHECK(e["read_p_value"].is_null());
    CHECK(e["response_p_value"].is_null());
  }
}

TEST_CASE("HTTP: classify matches the library") {
  MessageService svc(fixtures::coarse_model(), std::nullopt);
  Server server(svc);
  auto c = server.client();
  const auto& m = *fixtures::coarse_model();
  for (const auto& text : fixtures::random_texts(100, 21)) {
    const auto got = post(c, "/v1/classify", {{"text", text}});
    const auto want = json::parse(ensemble::to_json(ensemble::classify(m.ensemble, m.table, text)).dump());
    CHECK(got == want);
  }
}

TEST_CASE("HTTP: status codes") {
  MessageService svc(fixtures::coarse_model(), std::nullopt);
  Server server(svc);
  auto c = server.client();

  auto r = c.Post("/v1/classify", "{nope", "application/json");
  CHECK(r->status == 400);
  CHECK(json::parse(r->body).contains("error"));
  r = c.Post("/v1/classify", R"({"text":3})", "application/json");
  CHECK(r->status == 400);
  r = c.Post("/v1/messages", R"({"sender":"","receiver":"b","text":"x"})", "application/json");
  CHECK(r->status == 400);
  r = c.Get("/v1/messages/m42");
  CHECK(r->status == 404);
  r = c.Post("/v1/messages/m42/read", "", "application/json");
  CHECK(r->status == 404);
  r = c.Post("/v1/messages/m42/respond", R"({"text":"x"})", "application/json");
  CHECK(r->status == 404);
  r = c.Get("/v1/subscribe");
  CHECK(r->status == 400);
  r = c.Put("/v1/config/phase", R"({"color_feedback":"yes","phase_label":"a"})", "application/json");
  CHECK(r->status == 400);
  r = c.Get("/v1/subscribe?user=b&mode=poll&after=x");
  CHECK(r->status == 400);

  MessageService empty(nullptr, std::nullopt);
  Server bare(empty);
  auto c2 = bare.client();
  r = c2.Post("/v1/classify", R"({"text":"x"})", "application/json");
  CHECK(r->status == 503);
  CHECK(json::parse(r->body)["error"] == "model not loaded");
  r = c2.Post("/v1/messages", R"({"sender":"a","receiver":"b","text":"x"})", "application/json");
  CHECK(r->status == 503);
  r = c2.Get("/v1/metrics/latency");
  CHECK(r->status == 200);
}

TEST_CASE("HTTP: message lifecycle and phase config") {
  FakeClock fc;
  MessageService svc(fixtures::coarse_model(), std::nullopt, fc.clock());
  Server server(svc);
  auto c = server.client();

  auto phase = body_of(c.Get("/v1/config/phase"));
  CHECK(phase == json{{"color_feedback", true}, {"phase_label", "default"}});
  phase = body_of(c.Put("/v1/config/phase", R"({"color_feedback":false,"phase_label":"A"})", "application/json"));
  CHECK(phase == json{{"color_feedback", false}, {"phase_label", "A"}});
  CHECK(body_of(c.Get("/v1/config/phase")) == phase);

  const auto posted = post(c, "/v1/messages", {{"sender", "alice"}, {"receiver", "bob"}, {"text", "good news"}});
  CHECK(posted["message_id"] == "m1");
  CHECK(posted["emotion"].is_string());
  CHECK(posted["color"].is_string());

  auto msg = body_of(c.Get("/v1/messages/m1"));
  CHECK(msg["phase"] == "A");
  CHECK(msg["color_feedback"] == false);
  CHECK(msg["read_at"].is_null());
  CHECK(msg["emotion"] == posted["emotion"]);

  fc.advance(70);
  msg = post(c, "/v1/messages/m1/read", json::object());
  CHECK(msg["read_at"] == 1'000'070);
  fc.advance(5);
  msg = post(c, "/v1/messages/m1/read", json::object());
  CHECK(msg["read_at"] == 1'000'070);

  const auto reply = post(c, "/v1/messages/m1/respond", {{"text", "thanks"}});
  CHECK(reply["message_id"] == "m2");
  CHECK(reply["in_reply_to"] == "m1");
  CHECK(reply["message"]["responded_at"] == 1'000'075);

  const auto lat = body_of(c.Get("/v1/metrics/latency"));
  CHECK(lat["phases"] == json::array({"A"}));
}

TEST_CASE("HTTP: long poll") {
  MessageService svc(fixtures::coarse_model(), std::nullopt);
  Server server(svc);
  auto c = server.client();

  auto evs = body_of(c.Get("/v1/subscribe?user=bob&mode=poll&timeout_ms=0"));
  CHECK(evs["events"].empty());

  std::thread poster([&svc] {
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
    svc.post_message("alice", "bob", "wake up");
  });
  evs = body_of(c.Get("/v1/subscribe?user=bob&mode=poll&timeout_ms=5000"));
  poster.join();
  REQUIRE(evs["events"].size() == 1);
  CHECK(evs["events"][0]["seq"] == 1);
  CHECK(evs["events"][0]["sender"] == "alice");
  CHECK(evs["events"][0]["message_id"] == "m1");

  svc.post_message("alice", "bob", "second");
  evs = body_of(c.Get("/v1/subscribe?user=bob&mode=poll&after=1"));
  REQUIRE(evs["events"].size() == 1);
  CHECK(evs["events"][0]["seq"] == 2);
}

TEST_CASE("HTTP: NDJSON stream, keepalive and reconnect replay") {
  MessageService svc(fixtures::coarse_model(), std::nullopt);
  HttpOptions opts;
  opts.keepalive = std::chrono::milliseconds(300);
  Server server(svc, opts);

  for (int i = 0; i < 3; ++i) svc.post_message("alice", "bob", "note " + std::to_string(i));

  // Reads until `want` events arrive, counting blank keepalive lines.
  auto read_stream = [&](std::size_t want, std::size_t& keepalives) {
    std::vector<json> events;
    std::string buf;
    auto c = server.client();
    c.Get("/v1/subscribe?user=bob", [&](const char* data, std::size_t len) {
      buf.append(data, len);
      std::size_t nl;
      while ((nl = buf.find('\n')) != std::string::npos) {
        const auto line = buf.substr(0, nl);
        buf.erase(0, nl + 1);
        if (line.empty()) {
          ++keepalives;
        } else {
          events.push_back(json::parse(line));
        }
      }
      return events.size() < want;
    });
    return events;
  };

  std::size_t ka = 0;
  auto first = read_stream(3, ka);
  REQUIRE(first.size() == 3);
  for (int i = 0; i < 3; ++i) CHECK(first[i]["message_id"] == "m" + std::to_string(i + 1));

  // nothing was read, so a reconnect replays everything
  svc.mark_read("m1");
  std::thread poster([&svc] {
    std::this_thread::sleep_for(std::chrono::milliseconds(800));
    svc.post_message("carol", "bob", "late");
  });
  ka = 0;
  auto second = read_stream(3, ka);
  poster.join();
  REQUIRE(second.size() == 3);
  CHECK(second[0]["message_id"] == "m2");
  CHECK(second[1]["message_id"] == "m3");
  CHECK(second[2]["message_id"] == "m4");
  CHECK(second[2]["seq"] == 4);
  CHECK(ka >= 1);
}

TEST_CASE("port from environment") {
  ::unsetenv("EMOTIONPUSH_PORT");
  CHECK(port_from_env() == 8087);
  ::setenv("EMOTIONPUSH_PORT", "9123", 1);
  CHECK(port_from_env() == 9123);
  ::setenv("EMOTIONPUSH_PORT", "http", 1);
  CHECK_THROWS_AS(port_from_env(), InvalidArgument);
  ::unsetenv("EMOTIONPUSH_PORT");
}
