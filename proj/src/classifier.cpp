#include "turtletalk/classifier.hpp"

#include <cctype>

#include "turtletalk/parser.hpp"

namespace turtletalk {

namespace {

constexpr std::string_view kFunctionWords[] = {
    "i",     "i'm",   "im",    "want",  "to",    "the",   "a",      "an",    "make",  "please", "can",
    "could", "you",   "how",   "what",  "do",    "does",  "my",     "me",    "some",  "let",    "lets",
    "let's", "is",    "are",   "and",   "it",    "them",  "they",   "would", "like",  "should", "need",
    "into",  "with",  "for",   "in",    "on",    "when",  "why",    "where", "which", "this",   "that",
    "there", "be",    "will",  "we",    "our",   "your",  "hello",  "hi",    "thanks", "thank", "okay",
    "ok",    "yes",   "no",    "around", "from", "about", "again"};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Strips sentence punctuation so "turtles?" still counts as a word.
std::string bare_word(std::string_view w) {
  while (!w.empty() && (w.back() == '?' || w.back() == ',' || w.back() == '.' || w.back() == '!')) w.remove_suffix(1);
  return lowercase(w);
}

bool is_function_word(std::string_view word) {
  for (auto fw : kFunctionWords) {
    if (fw == word) return true;
  }
  return false;
}

}  // namespace

std::string_view class_label(const InputClass& input) {
  switch (input.index()) {
    case 0: return "valid";
    case 1: return "broken";
    case 2: return "natural";
    default: return "help";
  }
}

InputClass classify(std::string_view message, const PrimitiveRegistry& registry, AgentContext context) {
  const std::string_view text = trim(message);
  if (text.empty()) return Natural{""};

  const auto stream = tokenize(text);
  const auto& toks = stream.tokens;

  if (toks.size() == 2 && toks[0].kind == TokenKind::identifier && lowercase(toks[0].lexeme) == "help" &&
      toks[1].kind == TokenKind::identifier && stream.ok()) {
    return HelpQuery{lowercase(toks[1].lexeme)};
  }

  if (toks.empty()) return Natural{std::string(text)};
  const auto* head = toks[0].kind == TokenKind::identifier ? registry.lookup(toks[0].lexeme) : nullptr;
  if (!head || head->kind != PrimitiveKind::command) return Natural{std::string(text)};

  std::size_t words = 0;
  std::size_t recognized = 0;
  for (const auto& tok : toks) {
    if (tok.kind != TokenKind::identifier) continue;
    ++words;
    if (registry.lookup(tok.lexeme) || registry.color(tok.lexeme)) {
      ++recognized;
    } else if (is_function_word(bare_word(tok.lexeme))) {
      return Natural{std::string(text)};
    }
  }
  if (recognized * 2 < words) return Natural{std::string(text)};

  auto analysis = analyze(text, registry, context);
  if (analysis.clean()) return ValidCode{std::string(text), std::move(analysis.ast)};
  return BrokenCode{std::string(text), std::move(analysis.diagnostics)};
}

}  // namespace turtletalk
