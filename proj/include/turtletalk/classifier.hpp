#pragma once

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "turtletalk/ast.hpp"
#include "turtletalk/primitives.hpp"

namespace turtletalk {

struct ValidCode {
  std::string source;
  Ast ast;
};

struct BrokenCode {
  std::string source;
  std::vector<Diagnostic> diagnostics;
};

struct Natural {
  std::string text;
};

struct HelpQuery {
  std::string name;
};

using InputClass = std::variant<ValidCode, BrokenCode, Natural, HelpQuery>;

/// "valid", "broken", "natural" or "help"; the labels used by the corpus file.
std::string_view class_label(const InputClass& input);

/// Routes a raw user message to a pathway. Deterministic and total.
///
/// Heuristics, applied in order: blank -> Natural; `help <name>` ->
/// HelpQuery; first token not a known command, an English function word
/// among the unrecognized words, or fewer than half the words recognized
/// -> Natural; otherwise lex+parse+context-check decides ValidCode vs
/// BrokenCode.
InputClass classify(std::string_view message, const PrimitiveRegistry& registry,
                    AgentContext context = AgentContext::observer);

}  // namespace turtletalk
