#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "turtletalk/assistant.hpp"
#include "turtletalk/dialog.hpp"
#include "turtletalk/runtime.hpp"
#include "turtletalk/wire.hpp"

namespace turtletalk {

struct SessionConfig {
  BackendConfig backend;
  Features features;
  WorldBounds bounds;
  std::optional<std::uint64_t> seed;

  ordered_json to_json() const;
  /// Missing keys keep their defaults. Throws ConfigError on malformed input.
  static SessionConfig from_json(const nlohmann::json& j);
  static SessionConfig load(const std::filesystem::path& path);
};

enum class Origin { user, engine };

struct SessionEvent {
  std::uint64_t seq = 0;
  std::string timestamp;
  Origin origin = Origin::engine;
  ordered_json payload;

  std::string type() const { return payload.value("type", ""); }
  ordered_json to_json() const;
  /// Throws WireError.
  static SessionEvent from_json(const nlohmann::json& j);
  static SessionEvent from_json(const ordered_json& j);
};

/// Inline: backend calls complete inside handle(). Deferred: handle() leaves
/// the call in pending_call() and the owner reports back with deliver().
enum class BackendMode { inline_calls, deferred };

struct PendingCall {
  std::uint64_t id = 0;
  PromptKind kind = PromptKind::explain;
  std::vector<ChatTurn> prompt;
};

/// Returns the timestamp recorded on each event.
using Clock = std::function<std::string()>;

std::string utc_timestamp();

/// One learner's world, conversation and transcript. Not thread-safe: the
/// owner must feed it one event at a time.
class Session {
 public:
  using Listener = std::function<void(const SessionEvent&)>;

  /// Throws ConfigError for unknown backends or bad world bounds.
  Session(SessionConfig config, std::unique_ptr<ModelBackend> backend, BackendMode mode = BackendMode::inline_calls,
          Clock clock = utc_timestamp, Listener listener = {});
  static std::unique_ptr<Session> create(SessionConfig config, BackendMode mode = BackendMode::inline_calls,
                                         Clock clock = utc_timestamp, Listener listener = {});

  const std::string& id() const { return id_; }
  std::uint64_t seed() const { return seed_; }
  const SessionConfig& config() const { return config_; }
  BackendMode mode() const { return mode_; }
  ModelBackend& backend() { return *backend_; }

  /// Accepts user events only; backend events throw std::invalid_argument.
  std::vector<SessionEvent> handle(const Event& event);
  /// Completes the pending call `call_id`. Stale ids are ignored.
  std::vector<SessionEvent> deliver(std::uint64_t call_id, const Completion& result);

  const std::optional<PendingCall>& pending_call() const { return pending_; }
  const std::vector<SessionEvent>& transcript() const { return transcript_; }
  const DialogState& dialog() const { return dialog_; }
  const World& world() const { return world_; }
  ViewModel view() const { return snapshot(world_); }

 private:
  SessionConfig config_;
  std::unique_ptr<ModelBackend> backend_;
  BackendMode mode_;
  Clock clock_;
  Listener listener_;
  std::string id_;
  std::uint64_t seed_ = 0;
  World world_;
  DialogState dialog_;
  std::vector<SessionEvent> transcript_;
  std::optional<PendingCall> pending_;
  std::uint64_t next_call_ = 1;

  void append(Origin origin, ordered_json payload, std::vector<SessionEvent>& out);
  void step(const Event& event, std::vector<SessionEvent>& out);
  void run(const Execute& exec, std::vector<SessionEvent>& out);
  void complete_inline(const CallBackend& call, std::vector<SessionEvent>& out);
  void feed_result(PromptKind kind, const Completion& result, std::vector<SessionEvent>& out);
};

// ---- transcripts ----------------------------------------------------------

/// Appends one JSON line per event, flushing after each.
class TranscriptWriter {
 public:
  explicit TranscriptWriter(const std::filesystem::path& path);
  void append(const SessionEvent& event);

 private:
  std::ofstream out_;
};

std::vector<SessionEvent> read_transcript(std::istream& in);
std::vector<SessionEvent> read_transcript(const std::filesystem::path& path);
void write_transcript(std::ostream& out, const std::vector<SessionEvent>& events);

/// Engine events without timestamps: `{"seq": n, "payload": {...}}`.
std::vector<ordered_json> engine_projection(const std::vector<SessionEvent>& events);
std::vector<Event> user_projection(const std::vector<SessionEvent>& events);

struct ReplayReport {
  bool ok = false;
  std::size_t compared = 0;
  std::string diff;  // empty when ok
  std::vector<SessionEvent> produced;
};

/// Replays the user events of `recorded` through a fresh session built
/// from its config record and compares the engine projections. Replies come
/// from the mock backend; calls recorded as failed fail again with the same
/// message. Deferred recordings get their replies delivered where the
/// recording shows them arriving.
ReplayReport replay(const std::vector<SessionEvent>& recorded);

/// Rebuilds the config stored in a transcript's first event.
SessionConfig config_from_transcript(const std::vector<SessionEvent>& events);

// ---- human rendering ------------------------------------------------------

struct RenderOptions {
  bool echo_user = true;
  bool show_view = false;
};

/// Text lines for one event as the command center would show them.
std::vector<std::string> render_lines(const SessionEvent& event, const Features& features,
                                      const RenderOptions& options = {});

/// Convenience for a whole transcript.
std::string render_transcript(const std::vector<SessionEvent>& events, const RenderOptions& options = {});

inline constexpr std::string_view kObserverPrompt = "observer> ";

}  // namespace turtletalk
