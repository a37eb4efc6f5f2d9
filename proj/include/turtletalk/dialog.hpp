#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "turtletalk/assistant.hpp"
#include "turtletalk/classifier.hpp"
#include "turtletalk/slots.hpp"

namespace turtletalk {

namespace option {
inline constexpr std::string_view fix = "Help me fix this code";
inline constexpr std::string_view explain = "Explain the error";
inline constexpr std::string_view clarify = "Let me clarify it";
inline constexpr std::string_view change_topic = "Let's change a topic";
}  // namespace option

inline constexpr std::size_t kMaxVersions = 20;

// ---- states ---------------------------------------------------------------

struct Idle {};

struct ErrorOptions {
  std::string source;
  std::vector<Diagnostic> diagnostics;
};

struct Explaining {
  std::string source;
  std::vector<Diagnostic> diagnostics;
  std::vector<ChatTurn> history;
};

struct Clarifying {
  std::string message;
  std::vector<std::string> intents;
  std::vector<ChatTurn> history;
};

struct SlotFilling {
  std::string intent;
  SlotSchema schema;
  SlotValues filled;

  const SlotSpec* next_slot() const;
  bool complete() const;
};

struct DraftReview {
  std::string topic;
  std::vector<CodeCandidate> candidates;  // never empty
  std::size_t cursor = 0;

  const CodeCandidate& current() const { return candidates.at(cursor); }
};

/// Waiting for a fix or edit of `base`; `versions` is the history the new
/// candidate will be appended to.
struct Fixing {
  std::string topic;
  CodeCandidate base;
  std::vector<CodeCandidate> versions;
};

using Phase = std::variant<Idle, ErrorOptions, Explaining, Clarifying, SlotFilling, DraftReview, Fixing>;

inline constexpr std::size_t kPhaseCount = std::variant_size_v<Phase>;

struct DialogState {
  Phase phase;
  std::vector<std::string> offered;
  /// Set while a backend call is in flight; `resume` is where the dialog
  /// goes back to if that call fails or is cancelled.
  std::optional<PromptKind> pending;
  std::shared_ptr<const DialogState> resume;

  bool is_idle() const { return std::holds_alternative<Idle>(phase) && !pending; }
};

std::string_view phase_name(const Phase& phase);

// ---- events ---------------------------------------------------------------

struct RawMessage {
  std::string text;
};
struct OptionSelected {
  std::string option;
};
struct RunRequested {};
struct AskEdit {
  std::string text;
};
struct NavigateVersion {
  int delta = 0;
};
struct FollowUp {
  std::string text;
};
/// Delivered by the session when the in-flight completion returns.
struct BackendReply {
  PromptKind kind = PromptKind::explain;
  std::string text;
};
struct BackendFailed {
  PromptKind kind = PromptKind::explain;
  std::string message;
};

using Event = std::variant<RawMessage, OptionSelected, RunRequested, AskEdit, NavigateVersion, FollowUp, BackendReply,
                           BackendFailed>;

inline constexpr std::size_t kEventCount = std::variant_size_v<Event>;

bool is_user_event(const Event& event);
std::string_view event_name(const Event& event);

// ---- actions --------------------------------------------------------------

struct Say {
  std::string text;
};
struct OfferOptions {
  std::vector<std::string> options;
};
struct ShowDiagnostics {
  std::string source;
  std::vector<Diagnostic> diagnostics;
};
struct PresentCandidate {
  CodeCandidate candidate;
  std::size_t position = 1;  // 1-based
  std::size_t total = 1;
};
struct Execute {
  std::string source;
  Ast ast;
};
struct CallBackend {
  PromptKind kind = PromptKind::explain;
  std::vector<ChatTurn> prompt;
  std::string working_text;
};
struct ShowSummary {
  SlotValues slots;
};
struct ShowDisclaimer {
  std::string text;
};
struct AskSlots {
  std::string intent;
  std::vector<SlotSpec> questions;
};

using Action = std::variant<Say, OfferOptions, ShowDiagnostics, PresentCandidate, Execute, CallBackend, ShowSummary,
                            ShowDisclaimer, AskSlots>;

std::string_view action_name(const Action& action);

// ---- transition -----------------------------------------------------------

struct Features {
  bool assistant = true;
  bool offer_fix = true;
  bool offer_explain = true;

  friend bool operator==(const Features&, const Features&) = default;
};

struct DialogDeps {
  const PrimitiveRegistry& registry;
  const IntentCatalog& intents;
  Features features;
};

struct Transition {
  DialogState state;
  std::vector<Action> actions;
};

/// Pure transition function, total over every state and event.
///
/// A user event arriving while a call is pending first abandons the call
/// (the state reverts to `resume`) and is then handled normally. Backend
/// events that do not match the pending call are ignored.
Transition advance(const DialogState& state, const Event& event, const DialogDeps& deps);

inline DialogState initial_state() { return DialogState{Idle{}, {}, std::nullopt, nullptr}; }

/// Shown when Run meets a candidate that still has errors.
std::string run_blocked_notice(std::size_t errors);

inline constexpr std::string_view kClarifyLeadIn =
    "It seems that you have several different needs. Let's do one at a time. Which one do you want to start with?";

}  // namespace turtletalk
