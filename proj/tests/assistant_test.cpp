#include "doctest.h"

#include <cstdlib>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "turtletalk/assistant.hpp"
#include "turtletalk/parser.hpp"
#include "turtletalk/printer.hpp"

using namespace turtletalk;

namespace {

const PrimitiveRegistry& reg() { return *PrimitiveRegistry::builtin(); }

const std::string kA3Message = "You can't use COLOR in a patch context, because COLOR is turtle/link-only.";

constexpr const char* kA7 =
    "; Create 10 turtles using the breed name \"turtles\"\n"
    "create-turtles 10 [\n"
    "  ; Set the turtles' positions randomly\n"
    "  setxy random-xcor random-ycor\n"
    "]";

constexpr const char* kA8Buggy =
    "; Move all turtles\n"
    "ask turtle [\n"
    "  ; Set heading to up\n"
    "  set heading 90\n"
    "  ; Move forward random between 1-2 units\n"
    "  fd (1 + random 2)\n"
    "]";

constexpr const char* kA8Fixed =
    "; Revised code and line comments and explanations\n"
    "; Move all turtles\n"
    "ask turtles [\n"
    "  ; Set heading to up\n"
    "  set heading 90\n"
    "  ; Move forward random between 1-2 units\n"
    "  fd (1 + random 2)\n"
    "]";

std::string text_of(const Completion& c) {
  REQUIRE(std::holds_alternative<std::string>(c));
  return std::get<std::string>(c);
}

std::string ask_mock(const std::vector<ChatTurn>& turns) {
  auto mock = MockBackend::builtin();
  return text_of(mock.complete(turns, {}));
}

SlotSchema create_turtles_schema() { return IntentCatalog::builtin().schema_for("Create turtles"); }

}  // namespace

TEST_CASE("explain prompt embeds the error verbatim") {
  const std::string src = "ask patches [ set color red ]";
  auto a = analyze(src, reg());
  REQUIRE(a.diagnostics.size() == 1);
  auto turns = build_explain_prompt(a.diagnostics, src, {});
  REQUIRE(turns.size() == 2);
  CHECK(turns[0].role == Role::system);
  CHECK(turns[1].role == Role::user);
  CHECK(turns[1].content.find(kA3Message) != std::string::npos);
  CHECK(turns[1].content.find(src) != std::string::npos);
  CHECK(turns[0].content.find("Do not write a complete corrected program") != std::string::npos);
  CHECK(build_explain_prompt(a.diagnostics, src, {}) == turns);
  CHECK_THROWS_AS(build_explain_prompt({}, src, {}), std::invalid_argument);

  std::vector<ChatTurn> history = {{Role::user, "earlier"}, {Role::assistant, "reply"}};
  auto with_history = build_explain_prompt(a.diagnostics, src, history);
  REQUIRE(with_history.size() == 4);
  CHECK(with_history[1] == history[0]);
  CHECK(with_history[2] == history[1]);
}

TEST_CASE("annotate_source places each message under its line") {
  const std::string src = "print 1\nfoo\nprint 2";
  auto a = analyze(src, reg());
  REQUIRE(a.diagnostics.size() == 1);
  CHECK(annotate_source(src, a.diagnostics) ==
        "print 1\nfoo\n; ERROR: " + a.diagnostics[0].message + "\nprint 2");
  CHECK(annotate_source("", {}) == "");
}

TEST_CASE("mock explains the patch COLOR mistake") {
  const std::string src = "ask patches [ set color red ]";
  auto a = analyze(src, reg());
  auto reply = ask_mock(build_explain_prompt(a.diagnostics, src, {}));
  CHECK(reply.find("PCOLOR") != std::string::npos);
  CHECK(reply.find("might make mistakes") != std::string::npos);
  CHECK_FALSE(first_code_block(reply).has_value());
}

TEST_CASE("fix prompt and mock repair of the ask turtle bug") {
  auto a = analyze(kA8Buggy, reg());
  REQUIRE(a.diagnostics.size() == 1);
  CHECK_THROWS_AS(build_fix_prompt({}, kA8Buggy, {}), std::invalid_argument);

  auto turns = build_fix_prompt(a.diagnostics, kA8Buggy, {});
  CHECK(turns == build_fix_prompt(a.diagnostics, kA8Buggy, {}));
  CHECK(turns[0].content.find(std::string(kFixDisclaimer)) != std::string::npos);
  CHECK(turns[0].content.find("Keep every comment") != std::string::npos);

  auto reply = ask_mock(turns);
  CHECK(reply.starts_with(kFixDisclaimer));
  auto cand = extract_candidate(reply, 3, reg(), CandidateOrigin::fix);
  REQUIRE(cand.has_value());
  CHECK(cand->version == 3);
  CHECK(cand->diagnostics.empty());
  CHECK(cand->runnable());
  CHECK(cand->origin == CandidateOrigin::fix);
  CHECK(pretty_print(*cand->ast) == kA8Fixed);
}

TEST_CASE("clarify splits create moving turtles into two intents") {
  auto turns = build_clarify_prompt("create moving turtles", {});
  REQUIRE(turns.size() == 2);
  CHECK(turns[0].content.find("at most 4") != std::string::npos);
  CHECK(turns[1].content == "create moving turtles");
  CHECK(parse_intents(ask_mock(turns)) == std::vector<std::string>{"Create turtles", "Make turtles move"});
}

TEST_CASE("parse_intents keeps at most four bullets") {
  CHECK(parse_intents("Sure!\n- a\n* b\n-   \n- c\n- d\n- e") == std::vector<std::string>{"a", "b", "c", "d"});
  CHECK(parse_intents("no bullets here").empty());
}

TEST_CASE("draft prompt summarizes slots and the mock returns the first listing") {
  const SlotValues slots = {{"breed", "turtles"}, {"number", "10"}, {"position", "random"}};
  auto turns = build_draft_prompt(create_turtles_schema(), slots);
  REQUIRE(turns.size() == 2);
  CHECK(turns[1].content ==
        "Working on: create turtles\nBelow is a summary of my request:\n- breed: turtles\n- number: 10\n- position: random");
  CHECK(turns[0].content.find("Do not give step-by-step instructions") != std::string::npos);

  auto cand = extract_candidate(ask_mock(turns), 1, reg());
  REQUIRE(cand.has_value());
  CHECK(cand->runnable());
  CHECK(cand->source == kA7);
  CHECK(pretty_print(*cand->ast) == kA7);
}

TEST_CASE("draft prompt refuses unfilled required slots") {
  CHECK_THROWS_AS(build_draft_prompt(create_turtles_schema(), {{"breed", "turtles"}, {"number", "10"}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(build_draft_prompt(create_turtles_schema(),
                                     {{"breed", "turtles"}, {"number", "  "}, {"position", "random"}}),
                  std::invalid_argument);
}

TEST_CASE("misspelled slot values reach the prompt verbatim") {
  auto turns = build_draft_prompt(create_turtles_schema(), {{"breed", "rabits"}, {"number", "10"}, {"position", "random"}});
  CHECK(turns[1].content.find("- breed: rabits") != std::string::npos);
}

TEST_CASE("extract_candidate") {
  CHECK_FALSE(extract_candidate("Just some prose, no code.", 1, reg()).has_value());

  SUBCASE("repeated bug keeps the parser's diagnostics") {
    const std::string reply = std::string("Here you go:\n```logo\n") + kA8Buggy + "\n```\nHope it helps.";
    auto cand = extract_candidate(reply, 2, reg());
    REQUIRE(cand.has_value());
    CHECK(cand->source == kA8Buggy);
    CHECK_FALSE(cand->runnable());
    CHECK_FALSE(cand->ast.has_value());
    CHECK(cand->diagnostics == analyze(kA8Buggy, reg()).diagnostics);
  }

  SUBCASE("only the first block is used, the rest is logged") {
    std::ostringstream captured;
    auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(captured);
    auto previous = spdlog::default_logger();
    spdlog::set_default_logger(std::make_shared<spdlog::logger>("capture", sink));
    auto cand = extract_candidate("```\nfd 1\n```\ntext\n```\nbk 1\n```", 1, reg());
    spdlog::set_default_logger(previous);
    REQUIRE(cand.has_value());
    CHECK(cand->source == "fd 1");
    CHECK(captured.str().find("only the first is used") != std::string::npos);
  }

  SUBCASE("unterminated fence runs to the end") {
    auto cand = extract_candidate("```\nfd 1\nrt 90", 1, reg());
    REQUIRE(cand.has_value());
    CHECK(cand->source == "fd 1\nrt 90");
  }
}

TEST_CASE("strip_code_blocks leaves the prose") {
  CHECK(strip_code_blocks(std::string(kFixDisclaimer) + "\n```\nfd 1\n```\n\n\nBye") ==
        std::string(kFixDisclaimer) + "\nBye");
}

TEST_CASE("mock backend is a pure function of the turn list") {
  auto mock = MockBackend::builtin();
  const std::vector<ChatTurn> turns = build_clarify_prompt("something nobody planned for", {});
  const auto first = text_of(mock.complete(turns, {}));
  CHECK(first == mock.fallback());
  for (int i = 0; i < 5; ++i) CHECK(text_of(mock.complete(turns, {})) == first);
  CHECK(text_of(mock.complete(turns, {0.9, 10})) == first);

  std::stop_source stop;
  stop.request_stop();
  CHECK(std::holds_alternative<BackendError>(mock.complete(turns, {}, stop.get_token())));
}

TEST_CASE("mock table entries all name known tasks") {
  for (const auto& e : MockBackend::builtin().entries()) CHECK(prompt_kind_from_string(e.task).has_value());
  CHECK_THROWS(MockBackend::from_json(R"({"fallback":"x","entries":[{"task":"nope","response":"y"}]})"));
}

TEST_CASE("backend registry") {
  CHECK(make_backend({})->name() == "mock");
  CHECK_THROWS_AS(make_backend({"gpt", "", "", ""}), ConfigError);
  CHECK_THROWS_AS(make_backend({"http", "m", "", ""}), ConfigError);
  CHECK_THROWS_AS(make_backend({"http", "m", "not a url", ""}), ConfigError);
  CHECK_THROWS_AS(make_backend({"http", "m", "http://localhost:1/v1", "TURTLETALK_SURELY_UNSET_KEY"}), ConfigError);
  auto http = make_backend({"http", "small", "http://localhost:1/v1/chat/completions", ""});
  CHECK(http->name() == "http");
  CHECK(http->model() == "small");

  auto cfg = BackendConfig::from_json(nlohmann::json{{"name", "http"}, {"model", "m"}});
  CHECK(cfg.name == "http");
  CHECK(BackendConfig::from_json(cfg.to_json()).to_json() == cfg.to_json());
}

TEST_CASE("http backend speaks the chat-completions format") {
  httplib::Server server;
  nlohmann::json seen;
  std::string auth;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    seen = nlohmann::json::parse(req.body);
    auth = req.get_header_value("Authorization");
    res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"- Create turtles"}}]})",
                    "application/json");
  });
  server.Post("/broken", [](const httplib::Request&, httplib::Response& res) { res.status = 500; });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread worker([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  const std::string base = "http://127.0.0.1:" + std::to_string(port);
  HttpChatBackend backend(base + "/v1/chat/completions", "tiny-model", "sekrit");
  auto turns = build_clarify_prompt("create turtles", {});
  auto reply = backend.complete(turns, {0.5, 64});
  CHECK(text_of(reply) == "- Create turtles");
  CHECK(auth == "Bearer sekrit");
  CHECK(seen["model"] == "tiny-model");
  CHECK(seen["max_tokens"] == 64);
  CHECK(seen["messages"].size() == 2);
  CHECK(seen["messages"][0]["role"] == "system");
  CHECK(seen["messages"][1]["content"] == "create turtles");

  HttpChatBackend failing(base + "/broken", "tiny-model", "");
  auto err = failing.complete(turns, {});
  REQUIRE(std::holds_alternative<BackendError>(err));
  CHECK(std::get<BackendError>(err).message.find("500") != std::string::npos);

  server.stop();
  worker.join();

  CHECK(std::holds_alternative<BackendError>(HttpChatBackend::parse_response(200, "not json")));
  CHECK(std::holds_alternative<BackendError>(HttpChatBackend::parse_response(200, R"({"choices":[]})")));
}

TEST_CASE("intent catalog") {
  auto schema = create_turtles_schema();
  CHECK(schema.intent == "create turtles");
  REQUIRE(schema.slots.size() == 3);
  CHECK(schema.slots[0].question == "What do you want to call the turtles in the code?");
  CHECK(schema.slots[0].chips == std::vector<std::string>{"turtles", "rabbits", "cars"});
  CHECK(schema.slots[1].question == "How many turtles do you want to create?");
  CHECK(schema.slots[1].chips == std::vector<std::string>{"10", "50", "random between 20-30"});
  CHECK(schema.slots[2].question == "Where do you want to create the turtles?");
  CHECK(schema.slots[2].chips == std::vector<std::string>{"random", "at (0,0)", "around a specific patch"});

  auto move = IntentCatalog::builtin().schema_for("make turtles move");
  REQUIRE(move.slots.size() == 2);
  CHECK(move.slots[0].key == "direction");
  CHECK(move.slots[1].key == "distance");

  auto generic = IntentCatalog::builtin().schema_for("paint the sky");
  CHECK(generic.intent == "paint the sky");
  REQUIRE(generic.slots.size() == 1);
  CHECK(generic.slots[0].required);
  CHECK_FALSE(generic.slots[0].chips.empty());

  CHECK_THROWS(IntentCatalog::from_json(R"({"intents":[],"fallback":{"slots":[]}})"));
  CHECK_THROWS(IntentCatalog::from_json(
      R"({"intents":[],"fallback":{"slots":[{"key":"k","question":"q","chips":[]}]}})"));
}
