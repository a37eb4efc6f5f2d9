#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <stop_token>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "turtletalk/ast.hpp"
#include "turtletalk/diagnostic.hpp"
#include "turtletalk/primitives.hpp"
#include "turtletalk/slots.hpp"

namespace turtletalk {

enum class Role { system, user, assistant };

std::string_view to_string(Role role);

struct ChatTurn {
  Role role = Role::user;
  std::string content;

  friend bool operator==(const ChatTurn&, const ChatTurn&) = default;
};

enum class PromptKind { explain, fix, clarify, draft, follow_up, edit };

std::string_view to_string(PromptKind kind);
std::optional<PromptKind> prompt_kind_from_string(std::string_view name);

struct GenerationParams {
  double temperature = 0.2;
  int max_tokens = 800;
};

struct BackendError {
  std::string message;
};

using Completion = std::variant<std::string, BackendError>;

class ModelBackend {
 public:
  virtual ~ModelBackend() = default;

  virtual std::string name() const = 0;
  virtual std::string model() const = 0;

  /// Blocking. Implementations check `stop` where they can and return a
  /// BackendError once it has been requested.
  virtual Completion complete(const std::vector<ChatTurn>& turns, const GenerationParams& params,
                              std::stop_token stop = {}) = 0;
};

/// Deterministic test double driven by a matcher table. The task is read
/// from the `Task:` line of the system turn; an entry matches when every
/// one of its phrases occurs (case-insensitively) in the last user turn.
/// Responses may reference `{{key}}` values taken from `- key: value`
/// lines of that turn.
class MockBackend final : public ModelBackend {
 public:
  struct Entry {
    std::string task;
    std::vector<std::string> contains;
    std::string response;
  };

  static MockBackend from_json(std::string_view text);
  static const MockBackend& builtin();

  std::string name() const override { return "mock"; }
  std::string model() const override { return "mock-1"; }
  Completion complete(const std::vector<ChatTurn>& turns, const GenerationParams& params,
                      std::stop_token stop = {}) override;

  const std::vector<Entry>& entries() const { return entries_; }
  const std::string& fallback() const { return fallback_; }

 private:
  std::vector<Entry> entries_;
  std::string fallback_;
};

struct BackendConfig {
  std::string name = "mock";
  std::string model;
  std::string endpoint;
  std::string api_key_env;  // name of the environment variable holding the key

  nlohmann::json to_json() const;
  static BackendConfig from_json(const nlohmann::json& j);
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Client for any server speaking the chat-completions wire format.
class HttpChatBackend final : public ModelBackend {
 public:
  /// `endpoint` is the full URL of the completions route, for example
  /// `https://api.example.com/v1/chat/completions`.
  HttpChatBackend(std::string endpoint, std::string model, std::string api_key);

  std::string name() const override { return "http"; }
  std::string model() const override { return model_; }
  Completion complete(const std::vector<ChatTurn>& turns, const GenerationParams& params,
                      std::stop_token stop = {}) override;

  static nlohmann::json request_body(const std::vector<ChatTurn>& turns, const std::string& model,
                                     const GenerationParams& params);
  static Completion parse_response(int status, std::string_view body);

 private:
  std::string base_;
  std::string path_;
  std::string model_;
  std::string api_key_;
};

/// Registered names: "mock" and "http". Throws ConfigError otherwise, or when
/// the http backend lacks an endpoint.
std::unique_ptr<ModelBackend> make_backend(const BackendConfig& config);
bool is_registered_backend(std::string_view name);

// Prompt builders. All are pure.

inline constexpr std::string_view kDraftDisclaimer = "The code might have mistakes.";
inline constexpr std::string_view kFixDisclaimer = "Note that the code can still have mistakes.";

/// Source with each diagnostic's message inserted as a comment line under
/// the line where it starts.
std::string annotate_source(std::string_view source, const std::vector<Diagnostic>& diagnostics);

/// Throws std::invalid_argument when `diagnostics` is empty.
std::vector<ChatTurn> build_explain_prompt(const std::vector<Diagnostic>& diagnostics, std::string_view source,
                                           const std::vector<ChatTurn>& history);
/// Throws std::invalid_argument when `diagnostics` is empty.
std::vector<ChatTurn> build_fix_prompt(const std::vector<Diagnostic>& diagnostics, std::string_view source,
                                       const std::vector<ChatTurn>& history);
std::vector<ChatTurn> build_clarify_prompt(std::string_view message, const std::vector<ChatTurn>& history);
/// Throws std::invalid_argument when a required slot of `schema` is missing
/// from `slots` or blank.
std::vector<ChatTurn> build_draft_prompt(const SlotSchema& schema, const SlotValues& slots);
std::vector<ChatTurn> build_follow_up_prompt(std::string_view question, std::string_view source,
                                             const std::vector<ChatTurn>& history);
std::vector<ChatTurn> build_edit_prompt(std::string_view instruction, std::string_view source,
                                        const std::vector<ChatTurn>& history);

// Response handling.

enum class CandidateOrigin { draft, fix, edit, manual };

std::string_view to_string(CandidateOrigin origin);
std::optional<CandidateOrigin> candidate_origin_from_string(std::string_view name);

struct CodeCandidate {
  std::string source;
  std::optional<Ast> ast;  // set only when diagnostics is empty
  std::vector<Diagnostic> diagnostics;
  int version = 1;
  CandidateOrigin origin = CandidateOrigin::draft;

  bool runnable() const { return diagnostics.empty() && ast.has_value(); }
};

/// Validates `source` with the full analysis pipeline.
CodeCandidate make_candidate(std::string source, int version, CandidateOrigin origin,
                             const PrimitiveRegistry& registry);

/// First fenced code block of `response`, without the fence lines. Later
/// blocks are ignored with a warning on the log sink.
std::optional<std::string> first_code_block(std::string_view response);

/// none when the response carries no fenced block.
std::optional<CodeCandidate> extract_candidate(std::string_view response, int version,
                                               const PrimitiveRegistry& registry,
                                               CandidateOrigin origin = CandidateOrigin::draft);

/// Bullet lines ("- x" or "* x") of a clarify reply, at most four.
std::vector<std::string> parse_intents(std::string_view response);

/// Response text with every fenced block removed and blank runs collapsed.
std::string strip_code_blocks(std::string_view response);

}  // namespace turtletalk
