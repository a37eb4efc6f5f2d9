// Acceptance run: one PASS/FAIL line per primary criterion. Exits 1 if any
// criterion fails.

#include <chrono>
#include <deque>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "support/dialog_samples.hpp"
#include "support/program_gen.hpp"
#include "turtletalk/classifier.hpp"
#include "turtletalk/printer.hpp"
#include "turtletalk/runtime.hpp"
#include "turtletalk/session.hpp"

using namespace turtletalk;

namespace {

const std::string kFixtures = TURTLETALK_FIXTURE_DIR;
const std::string kData = TURTLETALK_DATA_DIR;

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool condition, const std::string& what) {
    if (!condition && pass) {
      pass = false;
      detail = what;
    }
  }
};

const std::vector<std::string> kCommandCenterInputs = {
    "create-turtles 100", "ask turtles [ fd random 10 ]", "print \"hello world!\"", "ask patches [ set color red ]",
    "help color",         "help pcolor"};

const char* const kCommandCenterText =
    "observer> create-turtles 100\n"
    "The command was executed successfully.\n"
    "observer> ask turtles [ fd random 10 ]\n"
    "The command was executed successfully.\n"
    "observer> print \"hello world!\"\n"
    "hello world!\n"
    "The command was executed successfully.\n"
    "observer> ask patches [ set color red ]\n"
    "Sorry, I can't understand: You can't use COLOR in a patch context, because COLOR is turtle/link-only.\n"
    "observer> help color\n"
    "color - Turtles, Links\n"
    "Built-in turtle characteristic that the color of a turtle and allows us to change it. (full text)\n"
    "See also: pcolor, scale-color, turtles-own, of\n"
    "observer> help pcolor\n"
    "pcolor - Turtles, Patches\n"
    "Reports a patch's color and changes a patch's color when used with the set primitive. (full text)\n"
    "See also: color, set, patches, neighbors\n";

const char* const kAssistantCenterText =
    "create-turtles 100\n"
    "Successfully executed the code.\n"
    "ask turtles [ fd random 10 ]\n"
    "Successfully executed the code.\n"
    "print \"hello world!\"\n"
    "hello world!\n"
    "ask patches [ set color red ]\n"
    "Sorry, there are still 1 errors in the code snippet.\n"
    "• color\n"
    "You can't use COLOR in a patch context, because COLOR is turtle/link-only.\n"
    "Help me fix this code\n"
    "Explain the error\n";

const char* const kRunBlocked =
    "Sorry, but we need to fix the 1 errors in the code (marked with red squiggly lines) before continuing.";

SessionConfig config(bool assistant, std::uint64_t seed = 20240101) {
  SessionConfig c;
  c.features.assistant = assistant;
  c.seed = seed;
  return c;
}

std::vector<const SessionEvent*> of_type(const std::vector<SessionEvent>& events, const std::string& type) {
  std::vector<const SessionEvent*> out;
  for (const auto& e : events) {
    if (e.type() == type) out.push_back(&e);
  }
  return out;
}

void require_fixture_replays(Verdict& v, const std::string& name) {
  try {
    const auto report = replay(read_transcript(std::filesystem::path(kFixtures + "/" + name)));
    v.require(report.ok, name + " diverged: " + report.diff);
  } catch (const std::exception& e) {
    v.require(false, name + ": " + e.what());
  }
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// ---------------------------------------------------------------------------

Verdict command_center_fidelity() {
  Verdict v;
  const auto start = std::chrono::steady_clock::now();
  auto session = Session::create(config(false));
  for (const auto& line : kCommandCenterInputs) session->handle(RawMessage{line});
  const auto text = render_transcript(session->transcript());
  const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  v.require(text == kCommandCenterText, "rendered text differs:\n" + text);
  v.require(elapsed < 1.0, "took " + std::to_string(elapsed) + " s");
  v.require(slurp(kFixtures + "/a2_command_center.txt") == kCommandCenterText, "shipped text fixture drifted");
  require_fixture_replays(v, "a2_command_center.jsonl");
  if (v.pass) v.detail = "byte match, " + std::to_string(static_cast<int>(elapsed * 1000)) + " ms";
  return v;
}

Verdict error_options_fidelity() {
  Verdict v;
  auto session = Session::create(config(true));
  for (std::size_t i = 0; i < 4; ++i) session->handle(RawMessage{kCommandCenterInputs[i]});
  v.require(render_transcript(session->transcript()) == kAssistantCenterText, "assistant transcript text differs");
  v.require(std::holds_alternative<ErrorOptions>(session->dialog().phase), "not in ErrorOptions");
  v.require(session->dialog().offered == std::vector<std::string>{"Help me fix this code", "Explain the error"},
            "offered options differ");

  const auto explained = session->handle(OptionSelected{"Explain the error"});
  v.require(of_type(explained, "call_backend").size() == 1, "explain did not make exactly one backend call");
  v.require(std::holds_alternative<Explaining>(session->dialog().phase), "not Explaining after explain");
  const auto followed = session->handle(FollowUp{"What should I write instead?"});
  v.require(of_type(followed, "call_backend").size() == 1, "follow-up did not reach the backend");
  v.require(of_type(followed, "say").size() == 1, "follow-up produced no answer");
  v.require(std::holds_alternative<Explaining>(session->dialog().phase), "follow-up left Explaining");
  require_fixture_replays(v, "a3_a4_error_options.jsonl");
  if (v.pass) v.detail = "two options, one call, follow-up accepted, golden stream matches";
  return v;
}

Verdict conversation_fidelity() {
  Verdict v;
  auto session = Session::create(config(true));
  session->handle(RawMessage{"create moving turtles"});
  v.require(session->dialog().offered == std::vector<std::string>{"Create turtles", "Make turtles move",
                                                                   "Let me clarify it", "Let's change a topic"},
            "clarify options differ");

  const auto slots = session->handle(OptionSelected{"Create turtles"});
  const auto asks = of_type(slots, "ask_slots");
  v.require(asks.size() == 1, "no slot questions");
  if (!v.pass) return v;
  const auto& questions = asks.front()->payload.at("questions");
  const std::vector<std::pair<std::string, std::vector<std::string>>> expected = {
      {"What do you want to call the turtles in the code?", {"turtles", "rabbits", "cars"}},
      {"How many turtles do you want to create?", {"10", "50", "random between 20-30"}},
      {"Where do you want to create the turtles?", {"random", "at (0,0)", "around a specific patch"}}};
  v.require(questions.size() == expected.size(), "slot question count differs");
  for (std::size_t i = 0; v.pass && i < expected.size(); ++i) {
    v.require(questions[i].at("question") == expected[i].first, "question " + std::to_string(i + 1) + " differs");
    v.require(questions[i].at("chips").get<std::vector<std::string>>() == expected[i].second,
              "chips " + std::to_string(i + 1) + " differ");
  }

  session->handle(RawMessage{"turtles"});
  session->handle(RawMessage{"10"});
  const auto drafted = session->handle(RawMessage{"random"});
  const auto summary = of_type(drafted, "show_summary");
  v.require(summary.size() == 1, "no summary");
  if (!v.pass) return v;
  ordered_json want_slots = ordered_json::array();
  for (const auto& [k, val] : std::vector<std::pair<std::string, std::string>>{
           {"breed", "turtles"}, {"number", "10"}, {"position", "random"}}) {
    want_slots.push_back({{"key", k}, {"value", val}});
  }
  v.require(summary.front()->payload.at("slots") == want_slots, "summary slots differ");
  const auto disclaimers = of_type(drafted, "show_disclaimer");
  v.require(disclaimers.size() == 1 && disclaimers.front()->payload.at("text") == "The code might have mistakes.",
            "draft disclaimer missing");
  const auto drafts = of_type(drafted, "present_candidate");
  v.require(drafts.size() == 1, "no draft");
  if (!v.pass) return v;
  const auto draft_source = drafts.front()->payload.at("candidate").at("source").get<std::string>();
  const auto draft_analysis = analyze(draft_source, testing::registry());
  v.require(draft_analysis.clean(), "draft has diagnostics");
  v.require(pretty_print(draft_analysis.ast) == std::string(testing::kFirstDraft) + "\n" ||
                pretty_print(draft_analysis.ast) == testing::kFirstDraft,
            "pretty-printed draft differs:\n" + pretty_print(draft_analysis.ast));

  session->handle(AskEdit{"make them move forward"});
  const auto injected = session->handle(AskEdit{testing::kBuggyMove});
  const auto shown = of_type(injected, "present_candidate");
  v.require(shown.size() == 1 && shown.front()->payload.at("position") == 3 && shown.front()->payload.at("total") == 3,
            "buggy candidate is not 3 / 3");
  const auto ran = session->handle(RunRequested{});
  bool notice = false;
  for (const auto* e : of_type(ran, "say")) notice = notice || e->payload.at("text") == kRunBlocked;
  v.require(notice, "run did not report the 1 error");

  const auto fixed = session->handle(OptionSelected{"Help me fix this code"});
  const auto fixes = of_type(fixed, "present_candidate");
  v.require(fixes.size() == 1, "no fixed candidate");
  if (!v.pass) return v;
  const auto& candidate = fixes.front()->payload.at("candidate");
  const auto fixed_source = candidate.at("source").get<std::string>();
  v.require(fixed_source.find("ask turtles [") != std::string::npos, "fix does not use ask turtles");
  v.require(candidate.at("diagnostics").empty() && analyze(fixed_source, testing::registry()).clean(),
            "fix still has diagnostics");
  std::istringstream buggy(testing::kBuggyMove);
  std::string line;
  while (std::getline(buggy, line)) {
    const auto at = line.find(';');
    if (at != std::string::npos) {
      v.require(fixed_source.find(line.substr(at)) != std::string::npos, "comment lost: " + line.substr(at));
    }
  }
  require_fixture_replays(v, "a6_a7_a8_conversation.jsonl");
  if (v.pass) v.detail = "intents, chips, summary, draft, run notice and fix all match";
  return v;
}

Verdict dialog_exhaustive() {
  Verdict v;
  const auto states = testing::sample_states();
  const auto events = testing::sample_events();
  std::set<std::size_t> phases, kinds;
  for (const auto& s : states) phases.insert(s.phase.index());
  for (const auto& e : events) kinds.insert(e.index());
  v.require(phases.size() == kPhaseCount, "sample states miss a phase");
  v.require(kinds.size() == kEventCount, "sample events miss an event kind");
  std::size_t pairs = 0;
  for (const auto& d : {testing::dialog_deps(), testing::dialog_deps({false, true, true})}) {
    for (const auto& s : states) {
      for (const auto& e : events) {
        try {
          advance(s, e, d);
          ++pairs;
        } catch (const std::exception& ex) {
          v.require(false, "advance threw for " + testing::fingerprint(s) + " x " + to_json(e).dump() + ": " + ex.what());
        }
      }
    }
  }

  const auto user_events = testing::sample_user_events();
  std::map<std::string, DialogState> seen;
  std::deque<std::pair<DialogState, int>> queue;
  auto push = [&](const DialogState& s, int depth) {
    if (seen.emplace(testing::fingerprint(s), s).second) queue.emplace_back(s, depth);
  };
  for (const auto& s : states) push(s, 0);
  while (!queue.empty()) {
    auto [s, depth] = queue.front();
    queue.pop_front();
    if (depth >= 2) continue;
    for (const auto& e : user_events) push(testing::drive(s, e).state, depth + 1);
  }
  std::size_t stuck = 0;
  for (const auto& [key, start] : seen) {
    bool found = start.is_idle();
    std::set<std::string> visited{key};
    std::deque<std::pair<DialogState, int>> q{{start, 0}};
    while (!found && !q.empty()) {
      auto [s, depth] = q.front();
      q.pop_front();
      if (depth >= 4) continue;
      for (const auto& e : user_events) {
        auto next = testing::drive(s, e).state;
        if (next.is_idle()) {
          found = true;
          break;
        }
        if (visited.insert(testing::fingerprint(next)).second) q.emplace_back(next, depth + 1);
      }
    }
    if (!found) ++stuck;
  }
  v.require(stuck == 0, std::to_string(stuck) + " reachable states cannot return to Idle");
  if (v.pass) {
    v.detail = std::to_string(pairs) + " state x event pairs, " + std::to_string(seen.size()) +
               " reachable states all reach Idle";
  }
  return v;
}

Verdict soundness_fuzz() {
  Verdict v;
  const auto& reg = testing::registry();
  testing::ProgramGenerator gen(reg, 31337);
  int accepted = 0;
  int failures = 0;
  int attempts = 0;
  while (accepted < 1000 && attempts < 200000) {
    ++attempts;
    const auto src = gen.program();
    auto a = analyze(src, reg);
    if (!a.clean()) continue;
    ++accepted;
    auto world = new_world({-4, 4, -4, 4}, static_cast<std::uint64_t>(attempts));
    const auto out = execute(a.ast, world, reg);
    if (!out.ok() && (out.error->code == "context-error" || out.error->code == "type-mismatch")) {
      ++failures;
      v.require(false, "context error at runtime for:\n" + src + "\n" + out.error->message);
    }
  }
  v.require(accepted == 1000, "only " + std::to_string(accepted) + " checked programs generated");
  if (v.pass) v.detail = "1000 checked programs, 0 context-class runtime errors";
  return v;
}

Verdict replay_determinism() {
  Verdict v;
  std::vector<std::vector<SessionEvent>> transcripts;
  for (const auto* name : {"a2_command_center.jsonl", "a3_a4_error_options.jsonl", "a6_a7_a8_conversation.jsonl"}) {
    transcripts.push_back(read_transcript(std::filesystem::path(kFixtures + "/" + name)));
  }
  // Random walks over the user event alphabet, in both backend modes.
  std::mt19937_64 rng(8);
  const auto user_events = testing::sample_user_events();
  for (int walk = 0; walk < 20; ++walk) {
    const auto mode = walk % 2 ? BackendMode::deferred : BackendMode::inline_calls;
    Session s(config(walk % 5 != 0, rng()), std::make_unique<MockBackend>(MockBackend::builtin()), mode, Clock{});
    MockBackend mock = MockBackend::builtin();
    for (int step = 0; step < 25; ++step) {
      s.handle(user_events[rng() % user_events.size()]);
      if (s.pending_call() && rng() % 3 != 0) {
        const auto call = *s.pending_call();
        s.deliver(call.id, mock.complete(call.prompt, {}));
      }
    }
    transcripts.push_back(s.transcript());
  }
  for (std::size_t i = 0; v.pass && i < transcripts.size(); ++i) {
    const auto first = replay(transcripts[i]);
    const auto second = replay(transcripts[i]);
    v.require(first.ok && second.ok, "transcript " + std::to_string(i) + " diverged: " + first.diff + second.diff);
    std::string a, b;
    for (const auto& j : engine_projection(first.produced)) a += j.dump() + "\n";
    for (const auto& j : engine_projection(second.produced)) b += j.dump() + "\n";
    v.require(a == b, "transcript " + std::to_string(i) + " replays differ from each other");
  }
  if (v.pass) v.detail = std::to_string(transcripts.size()) + " transcripts replayed twice, byte-identical";
  return v;
}

Verdict print_round_trip() {
  Verdict v;
  const auto& reg = testing::registry();
  testing::ProgramGenerator gen(reg, 4242);
  for (int i = 0; v.pass && i < 1000; ++i) {
    const auto src = gen.program();
    const auto first = parse(tokenize(src), reg);
    v.require(first.ok(), "generator produced unparsable source:\n" + src);
    if (!v.pass) break;
    const auto printed = pretty_print(first.ast);
    const auto second = parse(tokenize(printed), reg);
    v.require(second.ok() && to_sexpr(second.ast) == to_sexpr(first.ast), "round trip changed:\n" + src);
  }
  if (v.pass) v.detail = "1000 programs structurally identical after printing";
  return v;
}

Verdict classifier_corpus() {
  Verdict v;
  std::ifstream in(kData + "/classifier_corpus.jsonl");
  v.require(in.good(), "corpus missing");
  std::set<std::string> messages;
  int total = 0;
  int agree = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto rec = nlohmann::json::parse(line);
    const auto message = rec.at("message").get<std::string>();
    messages.insert(message);
    ++total;
    const auto got = std::string(class_label(classify(message, testing::registry())));
    if (got == rec.at("expected")) {
      ++agree;
    } else {
      v.require(false, "\"" + message + "\" classified " + got);
    }
  }
  v.require(total == 50, "corpus has " + std::to_string(total) + " items");
  auto appendix = kCommandCenterInputs;
  appendix.push_back("create moving turtles");
  for (const auto& m : appendix) v.require(messages.count(m) == 1, "corpus lacks \"" + m + "\"");
  if (v.pass) v.detail = std::to_string(agree) + "/" + std::to_string(total) + " agree";
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"transcript fidelity A.2", command_center_fidelity},
      {"transcript fidelity A.3/A.4", error_options_fidelity},
      {"transcript fidelity A.6-A.8", conversation_fidelity},
      {"dialog exhaustiveness and liveness", dialog_exhaustive},
      {"soundness fuzz", soundness_fuzz},
      {"replay determinism", replay_determinism},
      {"print round-trip", print_round_trip},
      {"classifier corpus", classifier_corpus},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Verdict verdict;
    try {
      verdict = check();
    } catch (const std::exception& e) {
      verdict = {false, std::string("threw: ") + e.what()};
    }
    std::cout << (verdict.pass ? "PASS " : "FAIL ") << name << ": " << verdict.detail << '\n';
    if (!verdict.pass) ++failed;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
