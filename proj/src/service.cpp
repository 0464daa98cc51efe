#include "emotionpush/service.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <set>

#include "emotionpush/mann_whitney.hpp"

namespace emotionpush::service {
namespace {

constexpr int kLogVersion = 1;

template <class T>
nlohmann::ordered_json optional_json(const std::optional<T>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

std::optional<double> mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return std::nullopt;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

std::optional<double> p_value(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) return std::nullopt;
  return mann_whitney(a, b).p;
}

template <class T>
T field(const nlohmann::json& record, const char* key) {
  auto it = record.find(key);
  if (it == record.end()) {
    throw ParseError(std::string("event log: record missing '") + key + "'");
  }
  return it->get<T>();
}

}  // namespace

Clock system_clock() {
  return [] {
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
  };
}

std::string make_preview(std::string_view text) {
  std::size_t chars = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    // count lead bytes only
    if ((static_cast<unsigned char>(text[i]) & 0xC0) != 0x80) {
      if (chars == kPreviewChars) return std::string(text.substr(0, i));
      ++chars;
    }
  }
  return std::string(text);
}

nlohmann::ordered_json Message::to_json() const {
  nlohmann::ordered_json doc;
  doc["id"] = id;
  doc["sender"] = sender;
  doc["receiver"] = receiver;
  doc["text"] = text;
  doc["emotion"] = emotion;
  doc["color"] = color;
  doc["phase"] = phase;
  doc["color_feedback"] = color_feedback;
  doc["delivered_at"] = delivered_at;
  doc["read_at"] = optional_json(read_at);
  doc["responded_at"] = optional_json(responded_at);
  doc["in_reply_to"] = optional_json(in_reply_to);
  return doc;
}

nlohmann::ordered_json NotificationEvent::to_json() const {
  nlohmann::ordered_json doc;
  doc["seq"] = seq;
  doc["message_id"] = message_id;
  doc["sender"] = sender;
  doc["preview"] = preview;
  if (emotion) doc["emotion"] = *emotion;
  doc["color"] = optional_json(color);
  return doc;
}

nlohmann::ordered_json LatencyReport::to_json() const {
  nlohmann::ordered_json doc;
  doc["test"] = test;
  doc["phases"] = phases;
  nlohmann::ordered_json by_emotion = nlohmann::ordered_json::object();
  for (const auto& e : emotions) {
    nlohmann::ordered_json entry;
    nlohmann::ordered_json by_phase = nlohmann::ordered_json::object();
    for (const auto& p : e.phases) {
      nlohmann::ordered_json cell;
      cell["n_read"] = p.n_read;
      cell["mean_read_latency_ms"] = optional_json(p.mean_read_latency_ms);
      cell["n_response"] = p.n_response;
      cell["mean_response_latency_ms"] = optional_json(p.mean_response_latency_ms);
      by_phase[p.phase] = std::move(cell);
    }
    entry["phases"] = std::move(by_phase);
    entry["read_p_value"] = optional_json(e.read_p_value);
    entry["response_p_value"] = optional_json(e.response_p_value);
    by_emotion[e.emotion] = std::move(entry);
  }
  doc["emotions"] = std::move(by_emotion);
  return doc;
}

LatencyReport compute_latency_report(const std::vector<Message>& messages, const std::vector<std::string>& emotions,
                                     const std::vector<std::string>& phases) {
  LatencyReport report;
  auto add_unique = [](std::vector<std::string>& list, const std::string& s) {
    if (std::find(list.begin(), list.end(), s) == list.end()) list.push_back(s);
  };
  std::vector<std::string> emotion_order = emotions;
  for (const auto& m : messages) {
    add_unique(report.phases, m.phase);
    add_unique(emotion_order, m.emotion);
  }
  for (const auto& p : phases) add_unique(report.phases, p);

  for (const auto& emotion : emotion_order) {
    EmotionLatency entry;
    entry.emotion = emotion;
    std::vector<std::vector<double>> reads(report.phases.size());
    std::vector<std::vector<double>> responses(report.phases.size());
    for (const auto& m : messages) {
      if (m.emotion != emotion) continue;
      const auto k = static_cast<std::size_t>(
          std::find(report.phases.begin(), report.phases.end(), m.phase) - report.phases.begin());
      if (m.read_at) reads[k].push_back(static_cast<double>(*m.read_at - m.delivered_at));
      if (m.read_at && m.responded_at) responses[k].push_back(static_cast<double>(*m.responded_at - *m.read_at));
    }
    for (std::size_t k = 0; k < report.phases.size(); ++k) {
      PhaseLatency cell;
      cell.phase = report.phases[k];
      cell.n_read = reads[k].size();
      cell.mean_read_latency_ms = mean_of(reads[k]);
      cell.n_response = responses[k].size();
      cell.mean_response_latency_ms = mean_of(responses[k]);
      entry.phases.push_back(std::move(cell));
    }
    if (report.phases.size() >= 2) {
      entry.read_p_value = p_value(reads[0], reads[1]);
      entry.response_p_value = p_value(responses[0], responses[1]);
    }
    report.emotions.push_back(std::move(entry));
  }
  return report;
}

MessageService::MessageService(std::shared_ptr<const LoadedModel> model, std::optional<std::filesystem::path> log_path,
                               Clock clock)
    : model_(std::move(model)), clock_(std::move(clock)) {
  if (!clock_) clock_ = system_clock();
  if (log_path) {
    if (std::filesystem::exists(*log_path)) replay(*log_path);
    log_.open(*log_path, std::ios::binary | std::ios::app);
    if (!log_) {
      throw Error("cannot open event log " + log_path->string());
    }
  }
}

MessageService::~MessageService() { shutdown(); }

void MessageService::replay(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot read event log " + path.string());
  }
  std::string contents((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();

  std::size_t pos = 0;
  std::size_t line_no = 0;
  std::size_t good_end = 0;
  while (pos < contents.size()) {
    const std::size_t nl = contents.find('\n', pos);
    const bool last = nl == std::string::npos;
    const std::size_t end = last ? contents.size() : nl;
    std::string_view line(contents.data() + pos, end - pos);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const std::size_t next = last ? contents.size() : nl + 1;
    if (line.empty()) {
      pos = next;
      if (!last) good_end = next;
      continue;
    }
    nlohmann::json record = nlohmann::json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.is_object()) {
      // An interrupted append leaves a torn last line; drop it.
      if (last || contents.find_first_not_of("\r\n", next) == std::string::npos) break;
      throw ParseError("event log line " + std::to_string(line_no) + ": malformed JSON");
    }
    try {
      apply(record);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("event log line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw ParseError("event log line " + std::to_string(line_no) + ": " + e.what());
    }
    pos = next;
    good_end = last ? contents.size() : next;
    if (last) {
      // complete record without trailing newline
      std::ofstream fix(path, std::ios::binary | std::ios::app);
      fix << '\n';
      good_end = contents.size() + 1;
    }
  }
  if (good_end < contents.size()) std::filesystem::resize_file(path, good_end);
}

void MessageService::apply(const nlohmann::json& record) {
  const int version = field<int>(record, "v");
  if (version != kLogVersion) {
    throw VersionError("event log record version " + std::to_string(version));
  }
  const auto type = field<std::string>(record, "type");
  if (type == "message") {
    Message m;
    m.id = field<std::string>(record, "id");
    m.sender = field<std::string>(record, "sender");
    m.receiver = field<std::string>(record, "receiver");
    m.text = field<std::string>(record, "text");
    m.emotion = field<std::string>(record, "emotion");
    m.color = field<std::string>(record, "color");
    m.phase = field<std::string>(record, "phase");
    m.color_feedback = field<bool>(record, "color_feedback");
    m.delivered_at = field<std::int64_t>(record, "delivered_at");
    if (auto it = record.find("in_reply_to"); it != record.end() && !it->is_null()) {
      m.in_reply_to = it->get<std::string>();
    }
    if (index_.contains(m.id)) {
      throw InvalidArgument("duplicate message id " + m.id);
    }
    index_.emplace(m.id, messages_.size());
    messages_.push_back(m);
    if (std::find(phase_order_.begin(), phase_order_.end(), m.phase) == phase_order_.end()) {
      phase_order_.push_back(m.phase);
    }
    enqueue_event(messages_.back());
  } else if (type == "read") {
    Message& m = find_locked(field<std::string>(record, "id"));
    if (!m.read_at) m.read_at = field<std::int64_t>(record, "at");
    acknowledge(m);
  } else if (type == "respond") {
    Message& m = find_locked(field<std::string>(record, "id"));
    const auto at = field<std::int64_t>(record, "at");
    if (!m.responded_at) m.responded_at = at;
    if (!m.read_at) m.read_at = at;
    acknowledge(m);
  } else if (type == "phase") {
    PhaseConfig p;
    p.color_feedback = field<bool>(record, "color_feedback");
    p.phase_label = field<std::string>(record, "phase_label");
    phase_ = std::move(p);
  } else {
    throw InvalidArgument("unknown event log record type '" + type + "'");
  }
}

void MessageService::append(const nlohmann::json& record) {
  if (log_.is_open()) {
    log_ << record.dump() << '\n';
    log_.flush();
    if (!log_) {
      throw Error("event log write failed");
    }
  }
  apply(record);
}

nlohmann::json MessageService::message_record(const Message& m) const {
  nlohmann::json r;
  r["v"] = kLogVersion;
  r["type"] = "message";
  r["id"] = m.id;
  r["sender"] = m.sender;
  r["receiver"] = m.receiver;
  r["text"] = m.text;
  r["emotion"] = m.emotion;
  r["color"] = m.color;
  r["phase"] = m.phase;
  r["color_feedback"] = m.color_feedback;
  r["delivered_at"] = m.delivered_at;
  r["in_reply_to"] = m.in_reply_to ? nlohmann::json(*m.in_reply_to) : nlohmann::json(nullptr);
  return r;
}

void MessageService::enqueue_event(const Message& m) {
  UserQueue& q = queues_[m.receiver];
  NotificationEvent ev;
  ev.seq = q.next_seq++;
  ev.message_id = m.id;
  ev.sender = m.sender;
  ev.preview = make_preview(m.text);
  if (m.color_feedback) {
    ev.emotion = m.emotion;
    ev.color = m.color;
  }
  q.pending.push_back(std::move(ev));
  events_cv_.notify_all();
}

void MessageService::acknowledge(const Message& m) {
  auto it = queues_.find(m.receiver);
  if (it == queues_.end()) return;
  auto& pending = it->second.pending;
  pending.erase(std::remove_if(pending.begin(), pending.end(),
                               [&](const NotificationEvent& ev) { return ev.message_id == m.id; }),
                pending.end());
}

Message& MessageService::find_locked(const std::string& id) {
  auto it = index_.find(id);
  if (it == index_.end()) {
    throw NotFound("unknown message id '" + id + "'");
  }
  return messages_[it->second];
}

Message MessageService::make_message(const std::string& sender, const std::string& receiver, const std::string& text,
                                     const ensemble::ClassificationResult& result, std::int64_t at) const {
  Message m;
  m.id = "m" + std::to_string(messages_.size() + 1);
  m.sender = sender;
  m.receiver = receiver;
  m.text = text;
  m.emotion = result.coarse;
  m.color = result.color;
  m.phase = phase_.phase_label;
  m.color_feedback = phase_.color_feedback;
  m.delivered_at = at;
  return m;
}

ensemble::ClassificationResult MessageService::classify(std::string_view text) const {
  if (!model_) throw ModelUnavailable();
  return ensemble::classify(model_->ensemble, model_->table, text);
}

PostResult MessageService::post_message(const std::string& sender, const std::string& receiver,
                                        const std::string& text) {
  if (sender.empty()) throw InvalidArgument("sender must be non-empty");
  if (receiver.empty()) throw InvalidArgument("receiver must be non-empty");
  const auto result = classify(text);

  std::lock_guard lock(mutex_);
  const Message m = make_message(sender, receiver, text, result, now());
  append(message_record(m));
  return {m.id, m.emotion, m.color};
}

std::int64_t MessageService::mark_read(const std::string& id) {
  std::lock_guard lock(mutex_);
  Message& m = find_locked(id);
  if (m.read_at) return *m.read_at;
  nlohmann::json r;
  r["v"] = kLogVersion;
  r["type"] = "read";
  r["id"] = id;
  r["at"] = std::max(now(), m.delivered_at);
  append(r);
  return *find_locked(id).read_at;
}

PostResult MessageService::respond(const std::string& id, const std::string& text) {
  {
    std::lock_guard lock(mutex_);
    find_locked(id);
  }
  if (text.empty()) throw InvalidArgument("response text must be non-empty");
  const auto result = classify(text);

  std::lock_guard lock(mutex_);
  const Message original = find_locked(id);
  const std::int64_t t = now();
  if (!original.responded_at) {
    nlohmann::json r;
    r["v"] = kLogVersion;
    r["type"] = "respond";
    r["id"] = id;
    r["at"] = std::max({t, original.delivered_at, original.read_at.value_or(original.delivered_at)});
    append(r);
  }
  Message reply = make_message(original.receiver, original.sender, text, result, t);
  reply.in_reply_to = id;
  append(message_record(reply));
  return {reply.id, reply.emotion, reply.color};
}

PhaseConfig MessageService::phase() const {
  std::lock_guard lock(mutex_);
  return phase_;
}

void MessageService::set_phase(const PhaseConfig& phase) {
  if (phase.phase_label.empty()) throw InvalidArgument("phase_label must be non-empty");
  std::lock_guard lock(mutex_);
  nlohmann::json r;
  r["v"] = kLogVersion;
  r["type"] = "phase";
  r["color_feedback"] = phase.color_feedback;
  r["phase_label"] = phase.phase_label;
  append(r);
}

std::optional<Message> MessageService::message(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return messages_[it->second];
}

std::vector<Message> MessageService::messages() const {
  std::lock_guard lock(mutex_);
  return messages_;
}

std::vector<NotificationEvent> MessageService::pending_events(const std::string& user, std::uint64_t after) const {
  std::lock_guard lock(mutex_);
  std::vector<NotificationEvent> out;
  auto it = queues_.find(user);
  if (it == queues_.end()) return out;
  for (const auto& ev : it->second.pending) {
    if (ev.seq > after) out.push_back(ev);
  }
  return out;
}

std::vector<NotificationEvent> MessageService::wait_events(const std::string& user, std::uint64_t after,
                                                           std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mutex_);
  std::vector<NotificationEvent> out;
  auto ready = [&] {
    out.clear();
    if (shut_down_) return true;
    auto it = queues_.find(user);
    if (it == queues_.end()) return false;
    for (const auto& ev : it->second.pending) {
      if (ev.seq > after) out.push_back(ev);
    }
    return !out.empty();
  };
  events_cv_.wait_for(lock, timeout, ready);
  return out;
}

LatencyReport MessageService::latency_report() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> emotions;
  if (model_) emotions = model_->ensemble.config.taxonomy.coarse_labels();
  return compute_latency_report(messages_, emotions, {phase_.phase_label});
}

void MessageService::shutdown() {
  {
    std::lock_guard lock(mutex_);
    shut_down_ = true;
  }
  events_cv_.notify_all();
}

bool MessageService::is_shut_down() const {
  std::lock_guard lock(mutex_);
  return shut_down_;
}

}  // namespace emotionpush::service
