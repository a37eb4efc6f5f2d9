#include "turtletalk/wire.hpp"

namespace turtletalk {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

ordered_json diagnostics_json(const std::vector<Diagnostic>& ds) {
  auto arr = ordered_json::array();
  for (const auto& d : ds) arr.push_back(to_json(d));
  return arr;
}

std::string text_field(const nlohmann::json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_string()) throw WireError(std::string("field '") + key + "' must be a string");
  return it->get<std::string>();
}

PromptKind kind_field(const nlohmann::json& j) {
  auto kind = prompt_kind_from_string(text_field(j, "kind"));
  if (!kind) throw WireError("unknown prompt kind");
  return *kind;
}

}  // namespace

ordered_json to_json(const Diagnostic& d) {
  ordered_json j;
  j["severity"] = std::string(to_string(d.severity));
  j["code"] = d.code;
  j["message"] = d.message;
  j["span"] = {{"begin", d.span.begin}, {"end", d.span.end}};
  j["related"] = d.related;
  return j;
}

Diagnostic diagnostic_from_json(const nlohmann::json& j) {
  Diagnostic d;
  d.severity = j.value("severity", "error") == "warning" ? Severity::warning : Severity::error;
  d.code = j.at("code").get<std::string>();
  d.message = j.at("message").get<std::string>();
  d.span = {j.at("span").at("begin").get<std::size_t>(), j.at("span").at("end").get<std::size_t>()};
  d.related = j.value("related", std::vector<std::string>{});
  return d;
}

ordered_json to_json(const CodeCandidate& c) {
  ordered_json j;
  j["source"] = c.source;
  j["version"] = c.version;
  j["origin"] = std::string(to_string(c.origin));
  j["runnable"] = c.runnable();
  j["diagnostics"] = diagnostics_json(c.diagnostics);
  return j;
}

ordered_json to_json(const ChatTurn& t) {
  ordered_json j;
  j["role"] = std::string(to_string(t.role));
  j["content"] = t.content;
  return j;
}

ordered_json to_json(const SlotSpec& s) {
  ordered_json j;
  j["key"] = s.key;
  j["question"] = s.question;
  j["chips"] = s.chips;
  j["required"] = s.required;
  return j;
}

ordered_json to_json(const Features& f) {
  ordered_json j;
  j["assistant"] = f.assistant;
  j["offer_fix"] = f.offer_fix;
  j["offer_explain"] = f.offer_explain;
  return j;
}

Features features_from_json(const nlohmann::json& j) {
  Features f;
  f.assistant = j.value("assistant", f.assistant);
  f.offer_fix = j.value("offer_fix", f.offer_fix);
  f.offer_explain = j.value("offer_explain", f.offer_explain);
  return f;
}

ordered_json to_json(const WorldBounds& b) {
  ordered_json j;
  j["min_pxcor"] = b.min_pxcor;
  j["max_pxcor"] = b.max_pxcor;
  j["min_pycor"] = b.min_pycor;
  j["max_pycor"] = b.max_pycor;
  return j;
}

WorldBounds bounds_from_json(const nlohmann::json& j) {
  WorldBounds b;
  b.min_pxcor = j.value("min_pxcor", b.min_pxcor);
  b.max_pxcor = j.value("max_pxcor", b.max_pxcor);
  b.min_pycor = j.value("min_pycor", b.min_pycor);
  b.max_pycor = j.value("max_pycor", b.max_pycor);
  return b;
}

ordered_json to_json(const Event& e) {
  ordered_json j;
  j["type"] = std::string(event_name(e));
  std::visit(overloaded{
                 [&](const RawMessage& x) { j["text"] = x.text; },
                 [&](const OptionSelected& x) { j["option"] = x.option; },
                 [&](const RunRequested&) {},
                 [&](const AskEdit& x) { j["text"] = x.text; },
                 [&](const NavigateVersion& x) { j["delta"] = x.delta; },
                 [&](const FollowUp& x) { j["text"] = x.text; },
                 [&](const BackendReply& x) {
                   j["kind"] = std::string(to_string(x.kind));
                   j["text"] = x.text;
                 },
                 [&](const BackendFailed& x) {
                   j["kind"] = std::string(to_string(x.kind));
                   j["message"] = x.message;
                 },
             },
             e);
  return j;
}

Event event_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw WireError("event must be a JSON object");
  const auto type = text_field(j, "type");
  if (type == "raw_message") return RawMessage{text_field(j, "text")};
  if (type == "option_selected") return OptionSelected{text_field(j, "option")};
  if (type == "run_requested") return RunRequested{};
  if (type == "ask_edit") return AskEdit{text_field(j, "text")};
  if (type == "navigate_version") {
    const auto it = j.find("delta");
    if (it == j.end() || !it->is_number_integer()) throw WireError("field 'delta' must be an integer");
    return NavigateVersion{it->get<int>()};
  }
  if (type == "follow_up") return FollowUp{text_field(j, "text")};
  if (type == "backend_reply") return BackendReply{kind_field(j), text_field(j, "text")};
  if (type == "backend_failed") return BackendFailed{kind_field(j), text_field(j, "message")};
  throw WireError("unknown event type: " + type);
}

ordered_json to_json(const Action& a) {
  ordered_json j;
  j["type"] = std::string(action_name(a));
  std::visit(overloaded{
                 [&](const Say& x) { j["text"] = x.text; },
                 [&](const OfferOptions& x) { j["options"] = x.options; },
                 [&](const ShowDiagnostics& x) {
                   j["source"] = x.source;
                   j["error_count"] = count_errors(x.diagnostics);
                   j["diagnostics"] = diagnostics_json(x.diagnostics);
                 },
                 [&](const PresentCandidate& x) {
                   j["candidate"] = to_json(x.candidate);
                   j["position"] = x.position;
                   j["total"] = x.total;
                 },
                 [&](const Execute& x) { j["source"] = x.source; },
                 [&](const CallBackend& x) {
                   j["kind"] = std::string(to_string(x.kind));
                   j["working_text"] = x.working_text;
                   auto turns = ordered_json::array();
                   for (const auto& t : x.prompt) turns.push_back(to_json(t));
                   j["prompt"] = std::move(turns);
                 },
                 [&](const ShowSummary& x) {
                   auto slots = ordered_json::array();
                   for (const auto& [k, v] : x.slots) slots.push_back(ordered_json{{"key", k}, {"value", v}});
                   j["slots"] = std::move(slots);
                 },
                 [&](const ShowDisclaimer& x) { j["text"] = x.text; },
                 [&](const AskSlots& x) {
                   j["intent"] = x.intent;
                   auto qs = ordered_json::array();
                   for (const auto& q : x.questions) qs.push_back(to_json(q));
                   j["questions"] = std::move(qs);
                 },
             },
             a);
  return j;
}

ordered_json to_json(const DialogState& s) {
  ordered_json j;
  j["phase"] = std::string(phase_name(s.phase));
  std::visit(overloaded{
                 [&](const Idle&) {},
                 [&](const ErrorOptions& x) {
                   j["source"] = x.source;
                   j["diagnostics"] = diagnostics_json(x.diagnostics);
                 },
                 [&](const Explaining& x) {
                   j["source"] = x.source;
                   j["turns"] = x.history.size();
                 },
                 [&](const Clarifying& x) {
                   j["message"] = x.message;
                   j["intents"] = x.intents;
                 },
                 [&](const SlotFilling& x) {
                   j["intent"] = x.intent;
                   auto filled = ordered_json::array();
                   for (const auto& [k, v] : x.filled) filled.push_back(ordered_json{{"key", k}, {"value", v}});
                   j["filled"] = std::move(filled);
                 },
                 [&](const DraftReview& x) {
                   j["topic"] = x.topic;
                   auto versions = ordered_json::array();
                   for (const auto& c : x.candidates) versions.push_back(c.source);
                   j["versions"] = std::move(versions);
                   j["cursor"] = x.cursor;
                 },
                 [&](const Fixing& x) {
                   j["topic"] = x.topic;
                   j["base"] = x.base.source;
                   j["versions"] = x.versions.size();
                 },
             },
             s.phase);
  j["offered"] = s.offered;
  if (s.pending) j["pending"] = std::string(to_string(*s.pending));
  return j;
}

}  // namespace turtletalk
