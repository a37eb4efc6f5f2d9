#include "turtletalk/dialog.hpp"

#include <algorithm>
#include <cctype>

#include "turtletalk/parser.hpp"

namespace turtletalk {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr std::string_view kChooseOffered = "Please choose one of the offered options.";
constexpr std::string_view kGentlePrompt = "Type a command to run it, or tell me what you would like to make.";
constexpr std::string_view kSlotLeadIn = "Sure, I can help you with that. Can you please provide me with more information?";
constexpr std::string_view kBackendTrouble =
    "Sorry, I could not get an answer from the assistant this time. Please try again.";

bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

class Machine {
 public:
  Machine(const DialogState& start, const DialogDeps& deps) : state_(start), deps_(deps) {}

  Transition finish() { return {std::move(state_), std::move(actions_)}; }

  void on(const Event& event) {
    if (is_user_event(event) && state_.pending) {
      // The user moved on; whatever was in flight is abandoned.
      state_ = state_.resume ? *state_.resume : initial_state();
    }
    std::visit(overloaded{
                   [&](const RawMessage& e) { on_message(e.text); },
                   [&](const OptionSelected& e) { on_option(e.option); },
                   [&](const RunRequested&) { on_run(); },
                   [&](const AskEdit& e) { on_ask(e.text); },
                   [&](const NavigateVersion& e) { on_navigate(e.delta); },
                   [&](const FollowUp& e) { on_follow_up(e.text); },
                   [&](const BackendReply& e) { on_reply(e); },
                   [&](const BackendFailed& e) { on_failure(e); },
               },
               event);
  }

 private:
  DialogState state_;
  const DialogDeps& deps_;
  std::vector<Action> actions_;

  void say(std::string text) { actions_.push_back(Say{std::move(text)}); }

  void offer(std::vector<std::string> options) {
    state_.offered = std::move(options);
    if (!state_.offered.empty()) actions_.push_back(OfferOptions{state_.offered});
  }

  void enter(Phase phase, std::vector<std::string> options) {
    state_.phase = std::move(phase);
    state_.pending.reset();
    state_.resume.reset();
    offer(std::move(options));
  }

  /// Moves to `phase` and asks the session to run `prompt`.
  void call(Phase phase, PromptKind kind, std::vector<ChatTurn> prompt, std::string working) {
    auto resume = std::make_shared<const DialogState>(state_);
    state_.phase = std::move(phase);
    state_.offered.clear();
    state_.pending = kind;
    state_.resume = std::move(resume);
    actions_.push_back(CallBackend{kind, std::move(prompt), std::move(working)});
  }

  std::vector<std::string> error_options() const {
    std::vector<std::string> out;
    if (!deps_.features.assistant) return out;
    if (deps_.features.offer_fix) out.emplace_back(option::fix);
    if (deps_.features.offer_explain) out.emplace_back(option::explain);
    return out;
  }

  std::vector<std::string> after_explanation_options() const {
    std::vector<std::string> out;
    if (deps_.features.offer_fix) out.emplace_back(option::fix);
    out.emplace_back(option::change_topic);
    return out;
  }

  // -- user events ----------------------------------------------------------

  void on_message(const std::string& text) {
    auto input = classify(text, deps_.registry);
    if (auto* valid = std::get_if<ValidCode>(&input)) {
      actions_.push_back(Execute{valid->source, std::move(valid->ast)});
      return;
    }
    if (auto* help_query = std::get_if<HelpQuery>(&input)) {
      if (auto entry = help(help_query->name, deps_.registry)) {
        say(entry->render());
      } else {
        say("Nothing named " + uppercase(help_query->name) + " has been defined.");
      }
      return;
    }
    if (auto* broken = std::get_if<BrokenCode>(&input)) {
      if (std::holds_alternative<SlotFilling>(state_.phase)) {
        fill_slot(broken->source);
        return;
      }
      show_broken(std::move(broken->source), std::move(broken->diagnostics));
      return;
    }
    const auto& natural = std::get<Natural>(input).text;
    if (!deps_.features.assistant) {
      // Without the assistant, prose is just code that does not compile.
      auto analysis = analyze(natural, deps_.registry);
      if (natural.empty()) {
        say(std::string(kGentlePrompt));
      } else if (analysis.clean()) {
        actions_.push_back(Execute{natural, std::move(analysis.ast)});
      } else {
        show_broken(natural, std::move(analysis.diagnostics));
      }
      return;
    }
    if (natural.empty()) {
      say(std::string(kGentlePrompt));
      return;
    }
    if (std::holds_alternative<SlotFilling>(state_.phase)) {
      fill_slot(natural);
      return;
    }
    if (auto* explaining = std::get_if<Explaining>(&state_.phase)) {
      ask_follow_up(*explaining, natural);
      return;
    }
    std::vector<ChatTurn> history;
    if (auto* clarifying = std::get_if<Clarifying>(&state_.phase)) history = clarifying->history;
    history.push_back({Role::user, natural});
    auto prompt = build_clarify_prompt(natural, std::vector<ChatTurn>(history.begin(), history.end() - 1));
    call(Clarifying{natural, {}, std::move(history)}, PromptKind::clarify, std::move(prompt), "");
  }

  void show_broken(std::string source, std::vector<Diagnostic> diagnostics) {
    actions_.push_back(ShowDiagnostics{source, diagnostics});
    auto options = error_options();
    if (options.empty()) {
      enter(Idle{}, {});
    } else {
      enter(ErrorOptions{std::move(source), std::move(diagnostics)}, std::move(options));
    }
  }

  void on_option(const std::string& choice) {
    if (std::find(state_.offered.begin(), state_.offered.end(), choice) == state_.offered.end()) {
      say(std::string(kChooseOffered));
      return;
    }
    if (choice == option::change_topic) {
      say("Sure. What would you like to do next?");
      enter(Idle{}, {});
      return;
    }
    if (choice == option::clarify) {
      auto history = std::holds_alternative<Clarifying>(state_.phase) ? std::get<Clarifying>(state_.phase).history
                                                                       : std::vector<ChatTurn>{};
      say("Sure. Please tell me more about what you want to make.");
      enter(Clarifying{"", {}, std::move(history)}, {std::string(option::change_topic)});
      return;
    }
    std::visit(overloaded{
                   [&](const ErrorOptions& s) {
                     if (choice == option::explain) {
                       explain(s.source, s.diagnostics);
                     } else {
                       auto base = make_candidate(s.source, 1, CandidateOrigin::manual, deps_.registry);
                       start_fix("fix", base, {base});
                     }
                   },
                   [&](const Explaining& s) {
                     auto base = make_candidate(s.source, 1, CandidateOrigin::manual, deps_.registry);
                     start_fix("fix", base, {base});
                   },
                   [&](const Clarifying& s) { start_slots(choice, s); },
                   [&](const DraftReview& s) { start_fix(s.topic, s.current(), s.candidates); },
                   [&](const auto&) { say(std::string(kChooseOffered)); },
               },
               Phase(state_.phase));
  }

  void explain(const std::string& source, const std::vector<Diagnostic>& diagnostics) {
    auto prompt = build_explain_prompt(diagnostics, source, {});
    std::vector<ChatTurn> history = {{Role::user, std::string(option::explain)}};
    call(Explaining{source, diagnostics, std::move(history)}, PromptKind::explain, std::move(prompt),
         "Let me take a look at the error.");
  }

  void ask_follow_up(const Explaining& s, const std::string& question) {
    auto prompt = build_follow_up_prompt(question, s.source, s.history);
    auto next = s;
    next.history.push_back({Role::user, question});
    call(std::move(next), PromptKind::follow_up, std::move(prompt), "");
  }

  void start_fix(std::string topic, const CodeCandidate& base, std::vector<CodeCandidate> versions) {
    if (base.diagnostics.empty()) {
      say("This code has no errors to fix. You can run it.");
      return;
    }
    auto prompt = build_fix_prompt(base.diagnostics, base.source, {});
    call(Fixing{std::move(topic), base, std::move(versions)}, PromptKind::fix, std::move(prompt),
         "Sure, I am working on the fixed code.");
    actions_.push_back(ShowDisclaimer{std::string(kFixDisclaimer)});
  }

  void start_slots(const std::string& intent, const Clarifying&) {
    auto schema = deps_.intents.schema_for(intent);
    say("Working on: " + schema.intent);
    say(std::string(kSlotLeadIn));
    actions_.push_back(AskSlots{schema.intent, schema.slots});
    enter(SlotFilling{schema.intent, std::move(schema), {}}, {std::string(option::change_topic)});
  }

  void fill_slot(const std::string& answer) {
    auto s = std::get<SlotFilling>(state_.phase);
    const auto* slot = s.next_slot();
    if (!slot) return;
    s.filled.emplace_back(slot->key, answer);
    if (!s.complete()) {
      const auto* next = s.next_slot();
      say(next->question);
      state_.phase = std::move(s);
      return;
    }
    actions_.push_back(ShowSummary{s.filled});
    auto prompt = build_draft_prompt(s.schema, s.filled);
    call(std::move(s), PromptKind::draft, std::move(prompt), "I am working on a first version of the code.");
    actions_.push_back(ShowDisclaimer{std::string(kDraftDisclaimer)});
  }

  void on_run() {
    auto* review = std::get_if<DraftReview>(&state_.phase);
    if (!review) {
      say("There is no code to run yet.");
      return;
    }
    const auto& current = review->current();
    if (current.runnable()) {
      actions_.push_back(Execute{current.source, *current.ast});
      return;
    }
    say("Trying to run the code...");
    say(run_blocked_notice(count_errors(current.diagnostics)));
    std::vector<std::string> options;
    if (deps_.features.assistant && deps_.features.offer_fix) options.emplace_back(option::fix);
    options.emplace_back(option::change_topic);
    offer(std::move(options));
  }

  void on_ask(const std::string& text) {
    auto* review = std::get_if<DraftReview>(&state_.phase);
    if (!review) {
      say("There is no code to change yet.");
      return;
    }
    if (blank(text)) {
      say("Tell me what to change, or type the new code.");
      return;
    }
    auto input = classify(text, deps_.registry);
    if (std::holds_alternative<ValidCode>(input) || std::holds_alternative<BrokenCode>(input)) {
      auto next = *review;
      add_version(next, make_candidate(text, next.candidates.back().version + 1, CandidateOrigin::manual,
                                       deps_.registry));
      present(next);
      state_.phase = std::move(next);
      return;
    }
    if (!deps_.features.assistant) {
      say("Only code edits are possible while the assistant is turned off.");
      return;
    }
    auto prompt = build_edit_prompt(text, review->current().source, {});
    call(Fixing{review->topic, review->current(), review->candidates}, PromptKind::edit, std::move(prompt),
         "Sure, I am working on the revised code.");
    actions_.push_back(ShowDisclaimer{std::string(kFixDisclaimer)});
  }

  void on_navigate(int delta) {
    auto* review = std::get_if<DraftReview>(&state_.phase);
    if (!review) {
      say("There are no code versions to browse.");
      return;
    }
    const auto last = static_cast<long>(review->candidates.size()) - 1;
    const long target = std::clamp(static_cast<long>(review->cursor) + delta, 0L, last);
    review->cursor = static_cast<std::size_t>(target);
    present(*review);
  }

  void on_follow_up(const std::string& text) {
    if (auto* explaining = std::get_if<Explaining>(&state_.phase); explaining && deps_.features.assistant) {
      if (blank(text)) {
        say(std::string(kGentlePrompt));
        return;
      }
      ask_follow_up(*explaining, text);
      return;
    }
    on_message(text);
  }

  // -- backend events -------------------------------------------------------

  bool expected(PromptKind kind) const { return state_.pending && *state_.pending == kind; }

  void on_reply(const BackendReply& reply) {
    if (!expected(reply.kind)) return;
    switch (reply.kind) {
      case PromptKind::explain:
      case PromptKind::follow_up: {
        const auto* current = std::get_if<Explaining>(&state_.phase);
        if (!current) return restore();
        auto s = *current;
        s.history.push_back({Role::assistant, reply.text});
        say(reply.text);
        enter(std::move(s), after_explanation_options());
        return;
      }
      case PromptKind::clarify: {
        const auto* current = std::get_if<Clarifying>(&state_.phase);
        if (!current) return restore();
        auto s = *current;
        s.history.push_back({Role::assistant, reply.text});
        s.intents = parse_intents(reply.text);
        std::vector<std::string> options = s.intents;
        if (s.intents.size() > 1) {
          say(std::string(kClarifyLeadIn));
        } else if (s.intents.size() == 1) {
          say("I think this is what you need. Pick it to start.");
        } else {
          say(strip_code_blocks(reply.text));
        }
        options.emplace_back(option::clarify);
        options.emplace_back(option::change_topic);
        enter(std::move(s), std::move(options));
        return;
      }
      case PromptKind::draft: {
        const auto* current = std::get_if<SlotFilling>(&state_.phase);
        if (!current) return restore();
        auto s = *current;
        auto candidate = extract_candidate(reply.text, 1, deps_.registry, CandidateOrigin::draft);
        if (!candidate) {
          say(strip_code_blocks(reply.text));
          s.filled.clear();
          actions_.push_back(AskSlots{s.intent, s.schema.slots});
          enter(std::move(s), {std::string(option::change_topic)});
          return;
        }
        DraftReview review{s.intent, {std::move(*candidate)}, 0};
        present(review);
        enter(std::move(review), {std::string(option::change_topic)});
        return;
      }
      case PromptKind::fix:
      case PromptKind::edit: {
        const auto* current = std::get_if<Fixing>(&state_.phase);
        if (!current) return restore();
        auto s = *current;
        const int version = s.versions.empty() ? 1 : s.versions.back().version + 1;
        const auto origin = reply.kind == PromptKind::fix ? CandidateOrigin::fix : CandidateOrigin::edit;
        auto candidate = extract_candidate(reply.text, version, deps_.registry, origin);
        if (!candidate) {
          say(strip_code_blocks(reply.text));
          restore();
          return;
        }
        DraftReview review{s.topic, std::move(s.versions), 0};
        add_version(review, std::move(*candidate));
        present(review);
        enter(std::move(review), {std::string(option::change_topic)});
        return;
      }
    }
  }

  void on_failure(const BackendFailed& failure) {
    if (!expected(failure.kind)) return;
    say(std::string(kBackendTrouble));
    restore();
  }

  void restore() {
    auto back = state_.resume ? *state_.resume : initial_state();
    state_ = std::move(back);
    if (!state_.offered.empty()) actions_.push_back(OfferOptions{state_.offered});
  }

  // -- helpers --------------------------------------------------------------

  static void add_version(DraftReview& review, CodeCandidate candidate) {
    review.candidates.push_back(std::move(candidate));
    if (review.candidates.size() > kMaxVersions) review.candidates.erase(review.candidates.begin());
    review.cursor = review.candidates.size() - 1;
  }

  void present(const DraftReview& review) {
    actions_.push_back(PresentCandidate{review.current(), review.cursor + 1, review.candidates.size()});
  }
};

}  // namespace

const SlotSpec* SlotFilling::next_slot() const {
  for (const auto& spec : schema.slots) {
    const bool done = std::any_of(filled.begin(), filled.end(), [&](const auto& kv) { return kv.first == spec.key; });
    if (!done) return &spec;
  }
  return nullptr;
}

bool SlotFilling::complete() const {
  for (const auto& spec : schema.slots) {
    if (!spec.required) continue;
    const bool done = std::any_of(filled.begin(), filled.end(), [&](const auto& kv) { return kv.first == spec.key; });
    if (!done) return false;
  }
  return true;
}

std::string_view phase_name(const Phase& phase) {
  constexpr std::string_view names[] = {"Idle",        "ErrorOptions", "Explaining", "Clarifying",
                                        "SlotFilling", "DraftReview",  "Fixing"};
  static_assert(std::size(names) == kPhaseCount);
  return names[phase.index()];
}

bool is_user_event(const Event& event) {
  return !std::holds_alternative<BackendReply>(event) && !std::holds_alternative<BackendFailed>(event);
}

std::string_view event_name(const Event& event) {
  constexpr std::string_view names[] = {"raw_message",      "option_selected", "run_requested",  "ask_edit",
                                        "navigate_version", "follow_up",       "backend_reply", "backend_failed"};
  static_assert(std::size(names) == kEventCount);
  return names[event.index()];
}

std::string_view action_name(const Action& action) {
  constexpr std::string_view names[] = {"say",         "offer_options", "show_diagnostics",
                                        "present_candidate", "execute", "call_backend",
                                        "show_summary", "show_disclaimer", "ask_slots"};
  static_assert(std::size(names) == std::variant_size_v<Action>);
  return names[action.index()];
}

std::string run_blocked_notice(std::size_t errors) {
  return "Sorry, but we need to fix the " + std::to_string(errors) +
         " errors in the code (marked with red squiggly lines) before continuing.";
}

Transition advance(const DialogState& state, const Event& event, const DialogDeps& deps) {
  Machine machine(state, deps);
  machine.on(event);
  return machine.finish();
}

}  // namespace turtletalk
