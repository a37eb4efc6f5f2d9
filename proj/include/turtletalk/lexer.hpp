#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "turtletalk/diagnostic.hpp"

namespace turtletalk {

enum class TokenKind {
  identifier,
  number,
  string,
  open_bracket,
  close_bracket,
  open_paren,
  close_paren,
  op,  // infix arithmetic or comparison operator
};

std::string_view to_string(TokenKind kind);

struct Token {
  TokenKind kind = TokenKind::identifier;
  std::string lexeme;
  Span span;
};

/// A `;` comment. `text` runs from the semicolon to end of line, right-trimmed.
struct Comment {
  std::string text;
  Span span;
};

struct TokenStream {
  std::vector<Token> tokens;
  std::vector<Comment> comments;
  std::vector<Diagnostic> diagnostics;

  bool ok() const { return diagnostics.empty(); }
};

/// Splits source into tokens. Never throws; malformed input yields
/// diagnostics alongside whatever tokens could be recovered.
TokenStream tokenize(std::string_view source);

bool is_operator_lexeme(std::string_view word);

}  // namespace turtletalk
