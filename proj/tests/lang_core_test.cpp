#include "doctest.h"

#include "support/program_gen.hpp"
#include "turtletalk/lexer.hpp"
#include "turtletalk/parser.hpp"
#include "turtletalk/printer.hpp"

using namespace turtletalk;

namespace {

const PrimitiveRegistry& reg() { return *PrimitiveRegistry::builtin(); }

ParseResult parse_text(std::string_view src) { return parse(tokenize(src), reg()); }

std::vector<std::string> codes(const std::vector<Diagnostic>& diags) {
  std::vector<std::string> out;
  for (const auto& d : diags) out.push_back(d.code);
  return out;
}

// Every token and comment span must index the source and match its text.
void check_spans(std::string_view src, const TokenStream& ts) {
  std::size_t prev_end = 0;
  for (const auto& t : ts.tokens) {
    CHECK(t.span.begin >= prev_end);
    CHECK(t.span.end <= src.size());
    CHECK(src.substr(t.span.begin, t.span.size()) == t.lexeme);
    prev_end = t.span.end;
  }
}

constexpr const char* kDraftA7 =
    "; Create 10 turtles using the breed name \"turtles\"\n"
    "create-turtles 10 [\n"
    "  ; Set the turtles' positions randomly\n"
    "  setxy random-xcor random-ycor\n"
    "]";

}  // namespace

TEST_CASE("tokenize splits a command into identifier and number") {
  auto ts = tokenize("create-turtles 100");
  REQUIRE(ts.ok());
  REQUIRE(ts.tokens.size() == 2);
  CHECK(ts.tokens[0].kind == TokenKind::identifier);
  CHECK(ts.tokens[0].lexeme == "create-turtles");
  CHECK(ts.tokens[1].kind == TokenKind::number);
  CHECK(ts.tokens[1].lexeme == "100");
}

TEST_CASE("tokenize of empty input is empty") {
  auto ts = tokenize("");
  CHECK(ts.ok());
  CHECK(ts.tokens.empty());
}

TEST_CASE("unterminated string spans from the quote to end of line") {
  const std::string src = "print \"hello\nfd 1";
  auto ts = tokenize(src);
  REQUIRE(ts.diagnostics.size() == 1);
  CHECK(ts.diagnostics[0].code == "unterminated-string");
  CHECK(src.substr(ts.diagnostics[0].span.begin, ts.diagnostics[0].span.size()) == "\"hello");
  // lexing resumes on the next line
  CHECK(ts.tokens.back().lexeme == "1");
}

TEST_CASE("comments are trivia with spans") {
  const std::string src = "fd 1 ; go\n; second\nrt";
  auto ts = tokenize(src);
  REQUIRE(ts.comments.size() == 2);
  CHECK(ts.comments[0].text == "; go");
  CHECK(ts.comments[1].text == "; second");
  CHECK(ts.tokens.size() == 3);
  check_spans(src, ts);
}

TEST_CASE("operators, negative numbers and hyphenated names") {
  auto ts = tokenize("fd (1 + random 2) - -3 random-xcor");
  std::vector<TokenKind> kinds;
  for (const auto& t : ts.tokens) kinds.push_back(t.kind);
  CHECK(kinds == std::vector<TokenKind>{TokenKind::identifier, TokenKind::open_paren, TokenKind::number,
                                        TokenKind::op, TokenKind::identifier, TokenKind::number,
                                        TokenKind::close_paren, TokenKind::op, TokenKind::number,
                                        TokenKind::identifier});
}

TEST_CASE("parse ask with reporter call inside block") {
  auto r = parse_text("ask turtles [ fd random 10 ]");
  REQUIRE(r.ok());
  CHECK(to_sexpr(r.ast) == "(program (ask (id turtles) (block (fd (call random (num 10))))))");
}

TEST_CASE("parse create-turtles with optional block") {
  auto r = parse_text("create-turtles 10 [ setxy random-xcor random-ycor ]");
  REQUIRE(r.ok());
  REQUIRE(r.ast.statements.size() == 1);
  const auto& stmt = r.ast.statements[0];
  REQUIRE(stmt.args.size() == 2);
  CHECK(std::holds_alternative<NumberLit>(stmt.args[0].node));
  CHECK(std::holds_alternative<Block>(stmt.args[1].node));
  CHECK(parse_text("create-turtles 100").ast.statements[0].args.size() == 1);
}

TEST_CASE("missing argument") {
  auto r = parse_text("fd");
  REQUIRE(r.diagnostics.size() == 1);
  CHECK(r.diagnostics[0].code == "missing-argument");
  CHECK(r.diagnostics[0].message == "FD expected 1 input.");
  CHECK(r.diagnostics[0].span == Span{0, 2});

  auto r2 = parse_text("setxy 1\nfd 2");
  REQUIRE(r2.diagnostics.size() == 1);
  CHECK(r2.diagnostics[0].message == "SETXY expected 2 inputs.");
  CHECK(r2.ast.statements.size() == 1);  // fd 2 survives
}

TEST_CASE("hand-computed arity table") {
  // Oracle: required arity from the registry data file, typed by hand.
  const std::vector<std::pair<std::string, std::size_t>> table = {
      {"create-turtles", 1}, {"ask", 2}, {"fd", 1}, {"right", 1}, {"left", 1}, {"set", 2},
      {"setxy", 2},         {"print", 1}, {"die", 0}, {"clear-all", 0}};
  for (const auto& [name, arity] : table) {
    CAPTURE(name);
    CHECK(reg().lookup(name)->required_arity() == arity);
    if (arity > 0) {
      auto r = parse_text(name);
      REQUIRE(r.diagnostics.size() == 1);
      CHECK(r.diagnostics[0].code == "missing-argument");
    } else {
      CHECK(parse_text(name).ok());
    }
  }
}

TEST_CASE("unknown primitive in command position, recovery continues") {
  auto r = parse_text("colour red\nfd 1 frobnicate 3 print 2");
  CHECK(codes(r.diagnostics) == std::vector<std::string>{"unknown-primitive", "unknown-primitive"});
  CHECK(r.diagnostics[0].message == "Nothing named COLOUR has been defined.");
  CHECK(r.ast.statements.size() == 2);
}

TEST_CASE("unknown identifier as argument yields exactly one diagnostic") {
  auto r = parse_text("ask turtle [\n  set heading 90\n  fd (1 + random 2)\n]");
  REQUIRE(r.diagnostics.size() == 1);
  CHECK(r.diagnostics[0].code == "unknown-primitive");
  CHECK(r.diagnostics[0].message == "Nothing named TURTLE has been defined.");
  CHECK(r.diagnostics[0].span == Span{4, 10});
}

TEST_CASE("unbalanced blocks") {
  auto open = parse_text("ask turtles [ fd 1");
  REQUIRE(open.diagnostics.size() == 1);
  CHECK(open.diagnostics[0].code == "unbalanced-block");
  CHECK(open.diagnostics[0].span == Span{12, 18});

  auto close = parse_text("fd 1 ] print 1");
  REQUIRE(close.diagnostics.size() == 1);
  CHECK(close.diagnostics[0].code == "unbalanced-block");
  CHECK(close.ast.statements.size() == 2);
}

TEST_CASE("blocks only where the registry allows them") {
  auto r = parse_text("fd [ 1 ]");
  REQUIRE(r.diagnostics.size() == 1);
  CHECK(r.diagnostics[0].code == "unexpected-block");
  auto r2 = parse_text("ask turtles fd 1");
  REQUIRE_FALSE(r2.ok());
  CHECK(r2.diagnostics[0].code == "missing-argument");
}

TEST_CASE("reporters and unsupported names in command position") {
  CHECK(codes(parse_text("random 5").diagnostics) == std::vector<std::string>{"expected-command"});
  CHECK(codes(parse_text("turtles-own [ energy ]").diagnostics) == std::vector<std::string>{"unsupported-primitive"});
  CHECK(codes(parse_text("set 5 3").diagnostics) == std::vector<std::string>{"expected-variable"});
}

TEST_CASE("several independent errors are all reported, deterministically") {
  const std::string src = "fd\nprint 1\nask turtles [ bar ]\nfoo 2 print";
  auto a = parse_text(src);
  auto b = parse_text(src);
  CHECK(codes(a.diagnostics) ==
        std::vector<std::string>{"missing-argument", "unknown-primitive", "unknown-primitive", "missing-argument"});
  CHECK(a.ast.statements.size() == 2);
  CHECK(a.diagnostics == b.diagnostics);
}

TEST_CASE("case-insensitive names keep their spelling") {
  auto r = parse_text("FD 1 Ask Turtles [ RT 1 ]");
  CHECK(r.diagnostics.size() == 1);  // RT is not in the registry
  auto ok = parse_text("FD 1");
  REQUIRE(ok.ok());
  CHECK(ok.ast.statements[0].name == "FD");
  CHECK(pretty_print(ok.ast) == "FD 1");
}

TEST_CASE("infix precedence and tight reporter arguments") {
  CHECK(to_sexpr(parse_text("fd 1 + 2 * 3").ast) == "(program (fd (+ (num 1) (* (num 2) (num 3)))))");
  CHECK(to_sexpr(parse_text("fd random 10 + 1").ast) == "(program (fd (+ (call random (num 10)) (num 1))))");
  CHECK(to_sexpr(parse_text("fd 10 - 2 - 3").ast) == "(program (fd (- (- (num 10) (num 2)) (num 3))))");
}

TEST_CASE("span soundness: children inside parents") {
  const std::string src = "ask turtles [ fd (1 + random 2) set color red ]";
  auto r = parse_text(src);
  REQUIRE(r.ok());
  const auto& ask = r.ast.statements[0];
  CHECK(ask.span == Span{0, src.size()});
  for (const auto& a : ask.args) CHECK(ask.span.contains(a.span));
  const auto& blk = std::get<Block>(ask.args[1].node);
  for (const auto& s : blk.statements) {
    CHECK(ask.args[1].span.contains(s.span));
    for (const auto& a : s.args) CHECK(s.span.contains(a.span));
  }
}

TEST_CASE("pretty_print canonical forms") {
  CHECK(pretty_print(parse_text("create-turtles 100").ast) == "create-turtles 100");
  CHECK(pretty_print(parse_text("ask   turtles [fd random 10]").ast) == "ask turtles [ fd random 10 ]");
  CHECK(pretty_print(parse_text("fd 2.50").ast) == "fd 2.5");
  CHECK(pretty_print(parse_text("ask turtles []").ast) == "ask turtles [ ]");
}

TEST_CASE("pretty_print reproduces the drafted listing with its comments") {
  const std::string messy =
      "; Create 10 turtles using the breed name \"turtles\"\n"
      "create-turtles 10 [ ; Set the turtles' positions randomly\n"
      "setxy   random-xcor random-ycor ]\n";
  auto r = parse_text(messy);
  REQUIRE(r.ok());
  CHECK(pretty_print(r.ast) == kDraftA7);
  CHECK(pretty_print(parse_text(kDraftA7).ast) == kDraftA7);
}

TEST_CASE("round-trip on 1000 fuzzed programs") {
  testing::ProgramGenerator gen(reg(), 7);
  int checked = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto src = gen.program();
    auto first = parse_text(src);
    CAPTURE(src);
    REQUIRE(first.ok());
    const auto printed = pretty_print(first.ast);
    auto second = parse_text(printed);
    CAPTURE(printed);
    REQUIRE(second.ok());
    CHECK(to_sexpr(second.ast) == to_sexpr(first.ast));
    ++checked;
  }
  CHECK(checked == 1000);
}

TEST_CASE("totality over arbitrary bytes") {
  std::mt19937_64 rng(3);
  const std::string alphabet = "ab fd[]()\";+-12.\n\xc3\xa9";
  for (int i = 0; i < 2000; ++i) {
    std::string src;
    const int len = static_cast<int>(rng() % 40);
    for (int k = 0; k < len; ++k) src += alphabet[rng() % alphabet.size()];
    auto ts = tokenize(src);
    check_spans(src, ts);
    auto a = analyze(src, reg());
    for (const auto& d : a.diagnostics) {
      CHECK(d.span.end <= src.size());
      CHECK_FALSE(d.message.empty());
    }
  }
}
