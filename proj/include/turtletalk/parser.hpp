#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "turtletalk/ast.hpp"
#include "turtletalk/lexer.hpp"
#include "turtletalk/primitives.hpp"

namespace turtletalk {

/// `ast` is complete when `diagnostics` is empty; otherwise it holds the
/// statements that could be recovered, with ErrorExpr placeholders.
struct ParseResult {
  Ast ast;
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return diagnostics.empty(); }
};

/// Arity-directed recursive descent. Reports every recoverable problem,
/// resynchronizing at the next statement boundary after a bad statement.
ParseResult parse(const TokenStream& tokens, const PrimitiveRegistry& registry);

/// Lex, parse and context-check in one go. Diagnostics are ordered lex,
/// parse, then context.
struct Analysis {
  TokenStream tokens;
  Ast ast;
  std::vector<Diagnostic> diagnostics;

  bool clean() const { return diagnostics.empty(); }
};

Analysis analyze(std::string_view source, const PrimitiveRegistry& registry,
                 AgentContext context = AgentContext::observer);

}  // namespace turtletalk
