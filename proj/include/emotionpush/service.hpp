#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "emotionpush/embedding.hpp"
#include "emotionpush/ensemble.hpp"
#include "emotionpush/error.hpp"

namespace emotionpush::service {

// Milliseconds since the Unix epoch.
using Clock = std::function<std::int64_t()>;
Clock system_clock();

// Raised by operations that need a classifier when none is loaded.
class ModelUnavailable : public Error {
 public:
  ModelUnavailable() : Error("model not loaded") {}
};

struct LoadedModel {
  ensemble::EnsembleModel ensemble;
  embedding::EmbeddingTable table;
};

struct PhaseConfig {
  bool color_feedback = true;
  std::string phase_label = "default";

  friend bool operator==(const PhaseConfig&, const PhaseConfig&) = default;
};

struct Message {
  std::string id;
  std::string sender;
  std::string receiver;
  std::string text;
  std::string emotion;  // coarse label
  std::string color;
  std::string phase;
  bool color_feedback = true;
  std::int64_t delivered_at = 0;
  std::optional<std::int64_t> read_at;
  std::optional<std::int64_t> responded_at;
  std::optional<std::string> in_reply_to;

  nlohmann::ordered_json to_json() const;
};

// Characters of message text carried in a notification.
inline constexpr std::size_t kPreviewChars = 80;
std::string make_preview(std::string_view text);

struct NotificationEvent {
  std::uint64_t seq = 0;  // per-receiver, strictly increasing
  std::string message_id;
  std::string sender;
  std::string preview;
  std::optional<std::string> emotion;  // absent when color feedback is off
  std::optional<std::string> color;    // null when color feedback is off

  nlohmann::ordered_json to_json() const;
};

struct PhaseLatency {
  std::string phase;
  std::size_t n_read = 0;
  std::optional<double> mean_read_latency_ms;
  std::size_t n_response = 0;
  std::optional<double> mean_response_latency_ms;
};

struct EmotionLatency {
  std::string emotion;
  std::vector<PhaseLatency> phases;
  std::optional<double> read_p_value;
  std::optional<double> response_p_value;
};

struct LatencyReport {
  std::vector<std::string> phases;  // first-appearance order
  std::vector<EmotionLatency> emotions;
  std::string test = "mann-whitney-u, two-sided";

  nlohmann::ordered_json to_json() const;
};

// Read latency = read_at - delivered_at, response latency = responded_at -
// read_at, grouped by emotion and phase stamp. p-values compare the first two
// phases. `phases` seeds the phase list (e.g. with the active phase).
LatencyReport compute_latency_report(const std::vector<Message>& messages, const std::vector<std::string>& emotions,
                                     const std::vector<std::string>& phases);

struct PostResult {
  std::string message_id;
  std::string emotion;
  std::string color;
};

// Server state: messages, per-receiver notification queues and the active
// phase. Every mutation is appended to a JSONL event log before it is
// applied; constructing with an existing log replays it.
class MessageService {
 public:
  MessageService(std::shared_ptr<const LoadedModel> model, std::optional<std::filesystem::path> log_path,
                 Clock clock = system_clock());
  ~MessageService();

  MessageService(const MessageService&) = delete;
  MessageService& operator=(const MessageService&) = delete;

  bool has_model() const noexcept { return model_ != nullptr; }

  // Throws ModelUnavailable.
  ensemble::ClassificationResult classify(std::string_view text) const;

  // Throws InvalidArgument for empty sender/receiver, ModelUnavailable.
  PostResult post_message(const std::string& sender, const std::string& receiver, const std::string& text);

  // First call wins; returns the stored read_at. Throws NotFound.
  std::int64_t mark_read(const std::string& id);

  // Sets responded_at (first call wins; implies a read) and delivers `text`
  // as a reply in the reverse direction. Throws NotFound, InvalidArgument
  // for empty text, ModelUnavailable.
  PostResult respond(const std::string& id, const std::string& text);

  PhaseConfig phase() const;
  // Throws InvalidArgument for an empty phase label.
  void set_phase(const PhaseConfig& phase);

  std::optional<Message> message(const std::string& id) const;
  std::vector<Message> messages() const;

  // Unacknowledged events for `user` with seq > after, in delivery order.
  // Events are acknowledged when their message is read.
  std::vector<NotificationEvent> pending_events(const std::string& user, std::uint64_t after = 0) const;
  // Blocks until pending_events(user, after) is non-empty, the timeout
  // passes, or shutdown() is called.
  std::vector<NotificationEvent> wait_events(const std::string& user, std::uint64_t after,
                                             std::chrono::milliseconds timeout) const;

  LatencyReport latency_report() const;

  void shutdown();
  bool is_shut_down() const;

 private:
  struct UserQueue {
    std::uint64_t next_seq = 1;
    std::deque<NotificationEvent> pending;
  };

  void replay(const std::filesystem::path& path);
  void apply(const nlohmann::json& record);
  void append(const nlohmann::json& record);
  nlohmann::json message_record(const Message& m) const;
  void enqueue_event(const Message& m);
  void acknowledge(const Message& m);
  Message& find_locked(const std::string& id);
  Message make_message(const std::string& sender, const std::string& receiver, const std::string& text,
                       const ensemble::ClassificationResult& result, std::int64_t now) const;
  std::int64_t now() const { return clock_(); }

  std::shared_ptr<const LoadedModel> model_;
  Clock clock_;
  std::ofstream log_;

  mutable std::mutex mutex_;
  mutable std::condition_variable events_cv_;
  bool shut_down_ = false;
  PhaseConfig phase_;
  std::vector<Message> messages_;
  std::unordered_map<std::string, std::size_t> index_;
  std::map<std::string, UserQueue> queues_;
  std::vector<std::string> phase_order_;
};

}  // namespace emotionpush::service
