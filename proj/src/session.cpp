#include "turtletalk/session.hpp"

#include <chrono>
#include <deque>
#include <ctime>
#include <istream>
#include <random>
#include <sstream>

#include "turtletalk/parser.hpp"

namespace turtletalk {

namespace {

std::string random_id() {
  std::random_device rd;
  std::ostringstream out;
  out << std::hex;
  for (int i = 0; i < 4; ++i) {
    const auto word = rd();
    for (int shift = 28; shift >= 0; shift -= 4) out << ((word >> shift) & 0xF);
  }
  return out.str();
}

std::uint64_t random_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) | rd();
}

std::string_view origin_name(Origin o) { return o == Origin::user ? "user" : "engine"; }

bool world_changed(const World& before, const World& after) {
  return before.turtles != after.turtles || before.patches != after.patches;
}

}  // namespace

std::string utc_timestamp() {
  using namespace std::chrono;
  const auto now = system_clock::now();
  const auto ms = duration_cast<milliseconds>(now.time_since_epoch()).count() % 1000;
  const std::time_t t = system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[40];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

// ---- config ---------------------------------------------------------------

ordered_json SessionConfig::to_json() const {
  ordered_json j;
  ordered_json b;
  b["name"] = backend.name;
  b["model"] = backend.model;
  b["endpoint"] = backend.endpoint;
  b["api_key_env"] = backend.api_key_env;
  j["backend"] = std::move(b);
  j["features"] = turtletalk::to_json(features);
  j["world"] = turtletalk::to_json(bounds);
  if (seed) {
    j["seed"] = *seed;
  } else {
    j["seed"] = nullptr;
  }
  return j;
}

SessionConfig SessionConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  try {
    SessionConfig c;
    if (j.contains("backend")) c.backend = BackendConfig::from_json(j.at("backend"));
    if (j.contains("features")) c.features = features_from_json(j.at("features"));
    if (j.contains("world")) c.bounds = bounds_from_json(j.at("world"));
    if (j.contains("seed") && !j.at("seed").is_null()) c.seed = j.at("seed").get<std::uint64_t>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
}

SessionConfig SessionConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config file " + path.string() + " is not valid JSON");
  return from_json(j);
}

// ---- events ---------------------------------------------------------------

ordered_json SessionEvent::to_json() const {
  ordered_json j;
  j["seq"] = seq;
  j["timestamp"] = timestamp;
  j["origin"] = std::string(origin_name(origin));
  j["payload"] = payload;
  return j;
}

SessionEvent SessionEvent::from_json(const nlohmann::json& j) { return from_json(ordered_json::parse(j.dump())); }

SessionEvent SessionEvent::from_json(const ordered_json& j) {
  if (!j.is_object()) throw WireError("session event must be a JSON object");
  try {
    SessionEvent e;
    e.seq = j.at("seq").get<std::uint64_t>();
    e.timestamp = j.value("timestamp", "");
    const auto origin = j.at("origin").get<std::string>();
    if (origin != "user" && origin != "engine") throw WireError("origin must be user or engine");
    e.origin = origin == "user" ? Origin::user : Origin::engine;
    e.payload = j.at("payload");
    if (!e.payload.is_object() || !e.payload.contains("type")) throw WireError("payload needs a type");
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw WireError(std::string("malformed session event: ") + ex.what());
  }
}

// ---- session --------------------------------------------------------------

Session::Session(SessionConfig config, std::unique_ptr<ModelBackend> backend, BackendMode mode, Clock clock,
                 Listener listener)
    : config_(std::move(config)),
      backend_(std::move(backend)),
      mode_(mode),
      clock_(std::move(clock)),
      listener_(std::move(listener)),
      id_(random_id()),
      dialog_(initial_state()) {
  if (!is_registered_backend(config_.backend.name)) throw ConfigError("unknown backend: " + config_.backend.name);
  if (!backend_) throw ConfigError("session needs a backend");
  seed_ = config_.seed.value_or(random_seed());
  config_.seed = seed_;
  try {
    world_ = new_world(config_.bounds, seed_);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  ordered_json payload;
  payload["type"] = "config";
  payload["seed"] = seed_;
  payload["backend"] = config_.to_json()["backend"];
  payload["features"] = to_json(config_.features);
  payload["bounds"] = to_json(config_.bounds);
  payload["mode"] = mode_ == BackendMode::deferred ? "deferred" : "inline";
  std::vector<SessionEvent> ignored;
  append(Origin::engine, std::move(payload), ignored);
}

std::unique_ptr<Session> Session::create(SessionConfig config, BackendMode mode, Clock clock, Listener listener) {
  auto backend = make_backend(config.backend);
  return std::make_unique<Session>(std::move(config), std::move(backend), mode, std::move(clock), std::move(listener));
}

void Session::append(Origin origin, ordered_json payload, std::vector<SessionEvent>& out) {
  SessionEvent e{transcript_.size() + 1, clock_ ? clock_() : std::string(), origin, std::move(payload)};
  transcript_.push_back(e);
  if (listener_) listener_(e);
  out.push_back(std::move(e));
}

std::vector<SessionEvent> Session::handle(const Event& event) {
  if (!is_user_event(event)) throw std::invalid_argument("backend results go through deliver()");
  std::vector<SessionEvent> out;
  append(Origin::user, to_json(event), out);
  if (pending_) {
    ordered_json cancelled;
    cancelled["type"] = "cancelled";
    cancelled["kind"] = std::string(to_string(pending_->kind));
    append(Origin::engine, std::move(cancelled), out);
    pending_.reset();
  }
  step(event, out);
  return out;
}

std::vector<SessionEvent> Session::deliver(std::uint64_t call_id, const Completion& result) {
  std::vector<SessionEvent> out;
  if (!pending_ || pending_->id != call_id) return out;
  const auto kind = pending_->kind;
  pending_.reset();
  feed_result(kind, result, out);
  return out;
}

void Session::feed_result(PromptKind kind, const Completion& result, std::vector<SessionEvent>& out) {
  Event reply = std::holds_alternative<std::string>(result)
                    ? Event{BackendReply{kind, std::get<std::string>(result)}}
                    : Event{BackendFailed{kind, std::get<BackendError>(result).message}};
  append(Origin::engine, to_json(reply), out);
  step(reply, out);
}

void Session::step(const Event& event, std::vector<SessionEvent>& out) {
  const DialogDeps deps{*PrimitiveRegistry::builtin(), IntentCatalog::builtin(), config_.features};
  auto t = advance(dialog_, event, deps);
  dialog_ = std::move(t.state);
  std::optional<CallBackend> call;
  for (const auto& action : t.actions) {
    append(Origin::engine, to_json(action), out);
    if (const auto* exec = std::get_if<Execute>(&action)) run(*exec, out);
    if (const auto* c = std::get_if<CallBackend>(&action)) call = *c;
  }
  if (!call) return;
  if (mode_ == BackendMode::deferred) {
    pending_ = PendingCall{next_call_++, call->kind, call->prompt};
  } else {
    complete_inline(*call, out);
  }
}

void Session::complete_inline(const CallBackend& call, std::vector<SessionEvent>& out) {
  Completion result;
  try {
    result = backend_->complete(call.prompt, {});
  } catch (const std::exception& e) {
    result = BackendError{e.what()};
  }
  feed_result(call.kind, result, out);
}

void Session::run(const Execute& exec, std::vector<SessionEvent>& out) {
  const World before = world_;
  const auto outcome = execute(exec.ast, world_, *PrimitiveRegistry::builtin());
  for (const auto& line : outcome.output_lines) {
    ordered_json o;
    o["type"] = "output";
    o["text"] = line;
    append(Origin::engine, std::move(o), out);
  }
  ordered_json result;
  result["type"] = "exec_result";
  result["ok"] = outcome.ok();
  if (outcome.ok()) {
    if (!config_.features.assistant) {
      result["notice"] = "The command was executed successfully.";
    } else if (outcome.output_lines.empty()) {
      result["notice"] = "Successfully executed the code.";
    } else {
      result["notice"] = nullptr;
    }
  } else {
    result["notice"] = outcome.error->message;
    result["error"] = to_json(*outcome.error);
  }
  append(Origin::engine, std::move(result), out);
  if (world_changed(before, world_)) {
    ordered_json v;
    v["type"] = "view";
    v["view"] = snapshot(world_).to_json();
    append(Origin::engine, std::move(v), out);
  }
}

// ---- transcripts ----------------------------------------------------------

TranscriptWriter::TranscriptWriter(const std::filesystem::path& path) : out_(path, std::ios::app) {
  if (!out_) throw std::runtime_error("cannot open transcript file " + path.string());
}

void TranscriptWriter::append(const SessionEvent& event) {
  out_ << event.to_json().dump() << '\n';
  out_.flush();
}

std::vector<SessionEvent> read_transcript(std::istream& in) {
  std::vector<SessionEvent> events;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto j = ordered_json::parse(line, nullptr, false);
    if (j.is_discarded()) throw WireError("line " + std::to_string(number) + " is not valid JSON");
    try {
      events.push_back(SessionEvent::from_json(j));
    } catch (const WireError& e) {
      throw WireError("line " + std::to_string(number) + ": " + e.what());
    }
  }
  return events;
}

std::vector<SessionEvent> read_transcript(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw WireError("cannot read transcript " + path.string());
  return read_transcript(in);
}

void write_transcript(std::ostream& out, const std::vector<SessionEvent>& events) {
  for (const auto& e : events) out << e.to_json().dump() << '\n';
}

std::vector<ordered_json> engine_projection(const std::vector<SessionEvent>& events) {
  std::vector<ordered_json> out;
  for (const auto& e : events) {
    if (e.origin != Origin::engine) continue;
    ordered_json j;
    j["seq"] = e.seq;
    j["payload"] = e.payload;
    out.push_back(std::move(j));
  }
  return out;
}

std::vector<Event> user_projection(const std::vector<SessionEvent>& events) {
  std::vector<Event> out;
  for (const auto& e : events) {
    if (e.origin == Origin::user) out.push_back(event_from_json(e.payload));
  }
  return out;
}

SessionConfig config_from_transcript(const std::vector<SessionEvent>& events) {
  if (events.empty() || events.front().type() != "config") {
    throw WireError("transcript must start with a config record");
  }
  const auto& p = events.front().payload;
  SessionConfig c;
  c.backend = BackendConfig::from_json(p.value("backend", nlohmann::json::object()));
  c.features = features_from_json(p.value("features", nlohmann::json::object()));
  c.bounds = bounds_from_json(p.value("bounds", nlohmann::json::object()));
  c.seed = p.at("seed").get<std::uint64_t>();
  return c;
}

namespace {

// Answers with the mock, except where the recording shows a failed call.
class ReplayBackend : public ModelBackend {
 public:
  explicit ReplayBackend(std::deque<std::optional<std::string>> failures) : failures_(std::move(failures)) {}
  std::string name() const override { return "mock"; }
  std::string model() const override { return MockBackend::builtin().model(); }
  Completion complete(const std::vector<ChatTurn>& turns, const GenerationParams& params,
                      std::stop_token stop) override {
    std::optional<std::string> failure;
    if (!failures_.empty()) {
      failure = std::move(failures_.front());
      failures_.pop_front();
    }
    if (failure) return BackendError{*failure};
    return mock_.complete(turns, params, stop);
  }

 private:
  std::deque<std::optional<std::string>> failures_;
  MockBackend mock_ = MockBackend::builtin();
};

bool is_backend_result(const SessionEvent& e) {
  return e.origin == Origin::engine && (e.type() == "backend_reply" || e.type() == "backend_failed");
}

}  // namespace

ReplayReport replay(const std::vector<SessionEvent>& recorded) {
  ReplayReport report;
  const auto config = config_from_transcript(recorded);
  const auto mode =
      recorded.front().payload.value("mode", "inline") == "deferred" ? BackendMode::deferred : BackendMode::inline_calls;

  std::deque<std::optional<std::string>> failures;
  for (const auto& e : recorded) {
    if (!is_backend_result(e)) continue;
    if (e.type() == "backend_failed") {
      failures.emplace_back(e.payload.value("message", ""));
    } else {
      failures.emplace_back(std::nullopt);
    }
  }
  auto backend = std::make_unique<ReplayBackend>(std::move(failures));
  auto* raw = backend.get();
  Session session(config, std::move(backend), mode, Clock{});
  for (const auto& e : recorded) {
    if (e.origin == Origin::user) {
      session.handle(event_from_json(e.payload));
    } else if (mode == BackendMode::deferred && is_backend_result(e) && session.pending_call()) {
      const auto call = *session.pending_call();
      session.deliver(call.id, raw->complete(call.prompt, {}, {}));
    }
  }
  report.produced = session.transcript();

  const auto expected = engine_projection(recorded);
  const auto actual = engine_projection(report.produced);
  const std::size_t n = std::min(expected.size(), actual.size());
  for (std::size_t i = 0; i < n; ++i) {
    ++report.compared;
    if (expected[i] != actual[i]) {
      report.diff = "engine event " + std::to_string(i + 1) + " differs\n  expected: " + expected[i].dump() +
                    "\n  actual:   " + actual[i].dump();
      return report;
    }
  }
  if (expected.size() != actual.size()) {
    report.diff = "expected " + std::to_string(expected.size()) + " engine events, replay produced " +
                  std::to_string(actual.size());
    if (expected.size() > n) report.diff += "\n  first missing: " + expected[n].dump();
    if (actual.size() > n) report.diff += "\n  first extra:   " + actual[n].dump();
    return report;
  }
  report.ok = true;
  return report;
}

// ---- rendering ------------------------------------------------------------

namespace {

void push_lines(std::vector<std::string>& out, std::string_view text) {
  std::size_t start = 0;
  while (true) {
    const auto nl = text.find('\n', start);
    out.emplace_back(text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start));
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
}

std::string bullet_name(const nlohmann::ordered_json& d, std::string_view source) {
  const auto& related = d.at("related");
  if (!related.empty()) return related.front().get<std::string>();
  const auto begin = d.at("span").at("begin").get<std::size_t>();
  const auto end = d.at("span").at("end").get<std::size_t>();
  if (begin < end && end <= source.size()) return lowercase(source.substr(begin, end - begin));
  return "code";
}

void render_diagnostics(std::vector<std::string>& out, const ordered_json& p, const Features& features) {
  const auto source = p.at("source").get<std::string>();
  const auto& diags = p.at("diagnostics");
  if (!features.assistant) {
    for (const auto& d : diags) out.push_back("Sorry, I can't understand: " + d.at("message").get<std::string>());
    return;
  }
  out.push_back("Sorry, there are still " + std::to_string(p.at("error_count").get<std::size_t>()) +
                " errors in the code snippet.");
  for (const auto& d : diags) {
    out.push_back("• " + bullet_name(d, source));
    out.push_back(d.at("message").get<std::string>());
  }
}

}  // namespace

std::vector<std::string> render_lines(const SessionEvent& event, const Features& features,
                                      const RenderOptions& options) {
  std::vector<std::string> out;
  const auto& p = event.payload;
  const auto type = event.type();
  if (event.origin == Origin::user) {
    if (!options.echo_user) return out;
    const std::string prefix = features.assistant ? "" : std::string(kObserverPrompt);
    if (type == "raw_message" || type == "follow_up") {
      out.push_back(prefix + p.at("text").get<std::string>());
    } else if (type == "option_selected") {
      out.push_back(p.at("option").get<std::string>());
    } else if (type == "run_requested") {
      out.push_back("Run");
    } else if (type == "ask_edit") {
      out.push_back("Ask: " + p.at("text").get<std::string>());
    } else if (type == "navigate_version") {
      out.push_back(p.at("delta").get<int>() < 0 ? "Back" : "Forward");
    }
    return out;
  }
  if (type == "say" || type == "show_disclaimer" || type == "output") {
    push_lines(out, p.at("text").get<std::string>());
  } else if (type == "offer_options") {
    for (const auto& o : p.at("options")) out.push_back(o.get<std::string>());
  } else if (type == "show_diagnostics") {
    render_diagnostics(out, p, features);
  } else if (type == "exec_result") {
    if (p.contains("notice") && p.at("notice").is_string()) out.push_back(p.at("notice").get<std::string>());
  } else if (type == "call_backend") {
    const auto working = p.at("working_text").get<std::string>();
    if (!working.empty()) out.push_back(working);
  } else if (type == "show_summary") {
    out.emplace_back("Below is a summary of my request:");
    for (const auto& s : p.at("slots")) {
      out.push_back("- " + s.at("key").get<std::string>() + ": " + s.at("value").get<std::string>());
    }
  } else if (type == "ask_slots") {
    for (const auto& q : p.at("questions")) {
      out.push_back(q.at("question").get<std::string>());
      std::string chips = "e.g.";
      for (const auto& c : q.at("chips")) chips += " [" + c.get<std::string>() + "]";
      out.push_back(chips);
    }
  } else if (type == "present_candidate") {
    const auto& c = p.at("candidate");
    push_lines(out, c.at("source").get<std::string>());
    for (const auto& d : c.at("diagnostics")) {
      out.push_back("  ^ " + d.at("message").get<std::string>());
    }
    const auto position = p.at("position").get<std::size_t>();
    std::string controls = "[Run] [Ask]";
    if (position > 1) controls += " [Back]";
    out.push_back(controls + " " + std::to_string(position) + " / " + std::to_string(p.at("total").get<std::size_t>()));
  } else if (type == "cancelled") {
    out.emplace_back("(stopped waiting for the assistant)");
  } else if (type == "view" && options.show_view) {
    out.push_back("[view: " + std::to_string(p.at("view").at("turtles").size()) + " turtles]");
  }
  return out;
}

std::string render_transcript(const std::vector<SessionEvent>& events, const RenderOptions& options) {
  const Features features = events.empty() ? Features{} : config_from_transcript(events).features;
  std::string text;
  for (const auto& e : events) {
    for (const auto& line : render_lines(e, features, options)) {
      text += line;
      text += '\n';
    }
  }
  return text;
}

}  // namespace turtletalk
