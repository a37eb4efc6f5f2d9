#include "turtletalk/assistant.hpp"

#include <algorithm>
#include <cstdlib>
#include <regex>
#include <sstream>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "embedded_data.hpp"
#include "turtletalk/parser.hpp"

namespace turtletalk {

namespace {

constexpr std::string_view kPreamble =
    "You are a patient coding partner for a beginner who is learning a Logo dialect for agent-based "
    "models. The world has an observer, turtles and patches. Keep answers short and friendly, and let "
    "the learner make the decisions.";

std::string system_text(std::string_view task, std::string_view instructions) {
  std::string out = "Task: ";
  out += task;
  out += '\n';
  out += kPreamble;
  out += '\n';
  out += instructions;
  return out;
}

std::vector<ChatTurn> assemble(std::string system, const std::vector<ChatTurn>& history, std::string user) {
  std::vector<ChatTurn> turns;
  turns.reserve(history.size() + 2);
  turns.push_back({Role::system, std::move(system)});
  for (const auto& turn : history) {
    if (turn.role != Role::system) turns.push_back(turn);
  }
  turns.push_back({Role::user, std::move(user)});
  return turns;
}

std::string fenced(std::string_view code) {
  std::string out = "```\n";
  out += code;
  if (out.back() != '\n') out += '\n';
  out += "```";
  return out;
}

std::size_t line_of(std::string_view source, std::size_t offset) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < offset && i < source.size(); ++i) {
    if (source[i] == '\n') ++line;
  }
  return line;
}

std::string error_list(std::string_view source, const std::vector<Diagnostic>& diagnostics) {
  std::string out = "Errors:";
  for (const auto& d : diagnostics) {
    out += "\n- line " + std::to_string(line_of(source, d.span.begin)) + ": " + d.message;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

bool is_fence(std::string_view line) { return trim(line).starts_with("```"); }

std::string task_of(const std::vector<ChatTurn>& turns) {
  for (const auto& turn : turns) {
    if (turn.role != Role::system) continue;
    for (auto line : split_lines(turn.content)) {
      if (line.starts_with("Task: ")) return std::string(trim(line.substr(6)));
    }
  }
  return {};
}

std::string substitute(std::string_view templ, std::string_view user_turn) {
  std::vector<std::pair<std::string, std::string>> vars;
  for (auto line : split_lines(user_turn)) {
    line = trim(line);
    if (!line.starts_with("- ")) continue;
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) continue;
    vars.emplace_back(std::string(trim(line.substr(2, colon - 2))), std::string(trim(line.substr(colon + 1))));
  }
  std::string out(templ);
  for (const auto& [key, value] : vars) {
    const std::string marker = "{{" + key + "}}";
    for (auto pos = out.find(marker); pos != std::string::npos; pos = out.find(marker, pos + value.size())) {
      out.replace(pos, marker.size(), value);
    }
  }
  return out;
}

}  // namespace

std::string_view to_string(Role role) {
  switch (role) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
  }
  return "user";
}

std::string_view to_string(PromptKind kind) {
  switch (kind) {
    case PromptKind::explain: return "explain";
    case PromptKind::fix: return "fix";
    case PromptKind::clarify: return "clarify";
    case PromptKind::draft: return "draft";
    case PromptKind::follow_up: return "follow-up";
    case PromptKind::edit: return "edit";
  }
  return "explain";
}

std::optional<PromptKind> prompt_kind_from_string(std::string_view name) {
  for (auto k : {PromptKind::explain, PromptKind::fix, PromptKind::clarify, PromptKind::draft,
                 PromptKind::follow_up, PromptKind::edit}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

std::string_view to_string(CandidateOrigin origin) {
  switch (origin) {
    case CandidateOrigin::draft: return "draft";
    case CandidateOrigin::fix: return "fix";
    case CandidateOrigin::edit: return "edit";
    case CandidateOrigin::manual: return "manual";
  }
  return "draft";
}

std::optional<CandidateOrigin> candidate_origin_from_string(std::string_view name) {
  for (auto o : {CandidateOrigin::draft, CandidateOrigin::fix, CandidateOrigin::edit, CandidateOrigin::manual}) {
    if (to_string(o) == name) return o;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Mock backend

MockBackend MockBackend::from_json(std::string_view text) {
  const auto j = nlohmann::json::parse(text);
  MockBackend mock;
  mock.fallback_ = j.at("fallback").get<std::string>();
  for (const auto& e : j.at("entries")) {
    Entry entry;
    entry.task = e.at("task").get<std::string>();
    entry.contains = e.value("contains", std::vector<std::string>{});
    for (auto& phrase : entry.contains) phrase = lowercase(phrase);
    entry.response = e.at("response").get<std::string>();
    if (!prompt_kind_from_string(entry.task)) {
      throw std::invalid_argument("mock backend entry has unknown task: " + entry.task);
    }
    mock.entries_.push_back(std::move(entry));
  }
  return mock;
}

const MockBackend& MockBackend::builtin() {
  static const MockBackend table = from_json(embedded::mock_backend_json);
  return table;
}

Completion MockBackend::complete(const std::vector<ChatTurn>& turns, const GenerationParams&, std::stop_token stop) {
  if (stop.stop_requested()) return BackendError{"cancelled"};
  const std::string task = task_of(turns);
  std::string_view last_user;
  for (auto it = turns.rbegin(); it != turns.rend(); ++it) {
    if (it->role == Role::user) {
      last_user = it->content;
      break;
    }
  }
  const std::string haystack = lowercase(last_user);
  for (const auto& entry : entries_) {
    if (entry.task != task) continue;
    bool all = true;
    for (const auto& phrase : entry.contains) {
      if (haystack.find(phrase) == std::string::npos) {
        all = false;
        break;
      }
    }
    if (all) return substitute(entry.response, last_user);
  }
  return fallback_;
}

// ---------------------------------------------------------------------------
// HTTP backend

nlohmann::json BackendConfig::to_json() const {
  return {{"name", name}, {"model", model}, {"endpoint", endpoint}, {"api_key_env", api_key_env}};
}

BackendConfig BackendConfig::from_json(const nlohmann::json& j) {
  BackendConfig c;
  c.name = j.value("name", c.name);
  c.model = j.value("model", c.model);
  c.endpoint = j.value("endpoint", c.endpoint);
  c.api_key_env = j.value("api_key_env", c.api_key_env);
  return c;
}

HttpChatBackend::HttpChatBackend(std::string endpoint, std::string model, std::string api_key)
    : model_(std::move(model)), api_key_(std::move(api_key)) {
  static const std::regex url(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(endpoint, m, url)) throw ConfigError("backend endpoint is not an http(s) URL: " + endpoint);
  base_ = m[1].str();
  path_ = m[2].matched ? m[2].str() : "/";
}

nlohmann::json HttpChatBackend::request_body(const std::vector<ChatTurn>& turns, const std::string& model,
                                             const GenerationParams& params) {
  nlohmann::json messages = nlohmann::json::array();
  for (const auto& t : turns) messages.push_back({{"role", std::string(to_string(t.role))}, {"content", t.content}});
  return {{"model", model},
          {"messages", std::move(messages)},
          {"temperature", params.temperature},
          {"max_tokens", params.max_tokens}};
}

Completion HttpChatBackend::parse_response(int status, std::string_view body) {
  if (status != 200) return BackendError{"backend returned HTTP " + std::to_string(status)};
  const auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded()) return BackendError{"backend returned malformed JSON"};
  try {
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception&) {
    return BackendError{"backend response has no message content"};
  }
}

Completion HttpChatBackend::complete(const std::vector<ChatTurn>& turns, const GenerationParams& params,
                                     std::stop_token stop) {
  if (stop.stop_requested()) return BackendError{"cancelled"};
  httplib::Client client(base_);
  client.set_connection_timeout(10);
  client.set_read_timeout(120);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  const auto body = request_body(turns, model_, params).dump();
  auto res = client.Post(path_, headers, body, "application/json");
  if (stop.stop_requested()) return BackendError{"cancelled"};
  if (!res) return BackendError{"could not reach backend: " + httplib::to_string(res.error())};
  return parse_response(res->status, res->body);
}

bool is_registered_backend(std::string_view name) { return name == "mock" || name == "http"; }

std::unique_ptr<ModelBackend> make_backend(const BackendConfig& config) {
  if (config.name == "mock") return std::make_unique<MockBackend>(MockBackend::builtin());
  if (config.name == "http") {
    if (config.endpoint.empty()) throw ConfigError("the http backend needs an endpoint");
    std::string key;
    if (!config.api_key_env.empty()) {
      const char* value = std::getenv(config.api_key_env.c_str());
      if (!value) throw ConfigError("environment variable " + config.api_key_env + " is not set");
      key = value;
    }
    return std::make_unique<HttpChatBackend>(config.endpoint, config.model, std::move(key));
  }
  throw ConfigError("unknown backend: " + config.name);
}

// ---------------------------------------------------------------------------
// Prompts

std::string annotate_source(std::string_view source, const std::vector<Diagnostic>& diagnostics) {
  std::string out;
  std::size_t offset = 0;
  const auto lines = split_lines(source);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = lines[i];
    const std::size_t end = offset + line.size();
    out += line;
    out += '\n';
    for (const auto& d : diagnostics) {
      const bool last = i + 1 == lines.size();
      if (d.span.begin >= offset && (d.span.begin <= end || last)) {
        out += "; ERROR: " + d.message + "\n";
      }
    }
    offset = end + 1;
  }
  while (!out.empty() && out.back() == '\n') out.pop_back();
  return out;
}

std::vector<ChatTurn> build_explain_prompt(const std::vector<Diagnostic>& diagnostics, std::string_view source,
                                           const std::vector<ChatTurn>& history) {
  if (diagnostics.empty()) throw std::invalid_argument("explain prompt needs at least one diagnostic");
  auto system = system_text(to_string(PromptKind::explain),
                            "Explain what the error below means and why it happened, in plain words a beginner "
                            "can follow. Do not write a complete corrected program unless the learner asks for "
                            "one. Say that your explanation might be wrong.");
  auto user = "Here is my code. Each error is marked with a comment under the line where it happens.\n" +
              fenced(annotate_source(source, diagnostics)) + "\n" + error_list(source, diagnostics);
  return assemble(std::move(system), history, std::move(user));
}

std::vector<ChatTurn> build_fix_prompt(const std::vector<Diagnostic>& diagnostics, std::string_view source,
                                       const std::vector<ChatTurn>& history) {
  if (diagnostics.empty()) throw std::invalid_argument("fix prompt needs at least one diagnostic");
  auto system = system_text(
      to_string(PromptKind::fix),
      "Fix the errors with the smallest possible edit. Keep every comment the learner wrote, and add one "
      "comment line at the top that says what you changed. Begin your reply with this sentence: \"" +
          std::string(kFixDisclaimer) + "\" Put the revised program in a single fenced code block.");
  auto user = "Please fix my code.\n" + fenced(source) + "\n" + error_list(source, diagnostics);
  return assemble(std::move(system), history, std::move(user));
}

std::vector<ChatTurn> build_clarify_prompt(std::string_view message, const std::vector<ChatTurn>& history) {
  auto system = system_text(to_string(PromptKind::clarify),
                            "The learner's message may mix several needs. Split it into at most 4 separate "
                            "needs. Reply with one short label per line, each line starting with \"- \". Do not "
                            "write code and do not give instructions.");
  return assemble(std::move(system), history, std::string(message));
}

std::vector<ChatTurn> build_draft_prompt(const SlotSchema& schema, const SlotValues& slots) {
  for (const auto& spec : schema.slots) {
    if (!spec.required) continue;
    const auto it = std::find_if(slots.begin(), slots.end(), [&](const auto& kv) { return kv.first == spec.key; });
    if (it == slots.end() || trim(it->second).empty()) {
      throw std::invalid_argument("required slot '" + spec.key + "' is not filled");
    }
  }
  auto system = system_text(to_string(PromptKind::draft),
                            "Write a short program for the request summarized below. Put a comment line above "
                            "each step. Reply with a single fenced code block. Do not give step-by-step "
                            "instructions and do not add anything the learner did not ask for.");
  std::string user = "Working on: " + schema.intent + "\nBelow is a summary of my request:";
  for (const auto& [key, value] : slots) user += "\n- " + key + ": " + value;
  return assemble(std::move(system), {}, std::move(user));
}

std::vector<ChatTurn> build_follow_up_prompt(std::string_view question, std::string_view source,
                                             const std::vector<ChatTurn>& history) {
  auto system = system_text(to_string(PromptKind::follow_up),
                            "Answer the learner's follow-up question about their code in a few sentences. Do not "
                            "write a complete program unless the learner asks for one.");
  auto user = "My code:\n" + fenced(source) + "\nQuestion: " + std::string(question);
  return assemble(std::move(system), history, std::move(user));
}

std::vector<ChatTurn> build_edit_prompt(std::string_view instruction, std::string_view source,
                                        const std::vector<ChatTurn>& history) {
  auto system = system_text(
      to_string(PromptKind::edit),
      "Change the program the way the learner asks, editing as little as possible and keeping their "
      "comments. Begin your reply with this sentence: \"" +
          std::string(kFixDisclaimer) + "\" Put the revised program in a single fenced code block.");
  auto user = "My code:\n" + fenced(source) + "\nChange request: " + std::string(instruction);
  return assemble(std::move(system), history, std::move(user));
}

// ---------------------------------------------------------------------------
// Responses

CodeCandidate make_candidate(std::string source, int version, CandidateOrigin origin,
                             const PrimitiveRegistry& registry) {
  CodeCandidate c;
  auto analysis = analyze(source, registry);
  c.source = std::move(source);
  c.diagnostics = std::move(analysis.diagnostics);
  if (c.diagnostics.empty()) c.ast = std::move(analysis.ast);
  c.version = version;
  c.origin = origin;
  return c;
}

std::optional<std::string> first_code_block(std::string_view response) {
  const auto lines = split_lines(response);
  std::size_t i = 0;
  while (i < lines.size() && !is_fence(lines[i])) ++i;
  if (i == lines.size()) return std::nullopt;
  std::string code;
  std::size_t j = i + 1;
  for (; j < lines.size() && !is_fence(lines[j]); ++j) {
    code += lines[j];
    code += '\n';
  }
  int extra = 0;
  for (std::size_t k = j + 1; k < lines.size(); ++k) {
    if (is_fence(lines[k])) {
      ++extra;
      ++k;
      while (k < lines.size() && !is_fence(lines[k])) ++k;
    }
  }
  if (extra > 0) spdlog::warn("response has {} more code block(s); only the first is used", extra);
  while (!code.empty() && code.back() == '\n') code.pop_back();
  return code;
}

std::optional<CodeCandidate> extract_candidate(std::string_view response, int version,
                                               const PrimitiveRegistry& registry, CandidateOrigin origin) {
  auto code = first_code_block(response);
  if (!code) return std::nullopt;
  return make_candidate(std::move(*code), version, origin, registry);
}

std::vector<std::string> parse_intents(std::string_view response) {
  std::vector<std::string> intents;
  for (auto line : split_lines(response)) {
    line = trim(line);
    if (!(line.starts_with("- ") || line.starts_with("* "))) continue;
    auto label = trim(line.substr(2));
    if (label.empty()) continue;
    intents.emplace_back(label);
    if (intents.size() == 4) break;
  }
  return intents;
}

std::string strip_code_blocks(std::string_view response) {
  std::string out;
  bool inside = false;
  bool blank = true;
  for (auto line : split_lines(response)) {
    if (is_fence(line)) {
      inside = !inside;
      blank = true;
      continue;
    }
    if (inside) continue;
    const bool empty = trim(line).empty();
    if (empty && blank) continue;
    out += line;
    out += '\n';
    blank = empty;
  }
  while (!out.empty() && (out.back() == '\n' || out.back() == ' ')) out.pop_back();
  return out;
}

}  // namespace turtletalk
