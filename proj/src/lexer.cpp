#include "turtletalk/lexer.hpp"

#include <array>
#include <cctype>
#include <charconv>

namespace turtletalk {

std::string_view to_string(Severity severity) {
  return severity == Severity::error ? "error" : "warning";
}

std::size_t count_errors(const std::vector<Diagnostic>& diagnostics) {
  std::size_t n = 0;
  for (const auto& d : diagnostics) {
    if (d.severity == Severity::error) ++n;
  }
  return n;
}

std::string_view to_string(TokenKind kind) {
  switch (kind) {
    case TokenKind::identifier: return "identifier";
    case TokenKind::number: return "number";
    case TokenKind::string: return "string";
    case TokenKind::open_bracket: return "open-bracket";
    case TokenKind::close_bracket: return "close-bracket";
    case TokenKind::open_paren: return "open-paren";
    case TokenKind::close_paren: return "close-paren";
    case TokenKind::op: return "operator";
  }
  return "?";
}

namespace {

constexpr std::array<std::string_view, 10> kOperators = {"+", "-", "*", "/", "<", ">",
                                                         "=", "!=", "<=", ">="};

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool is_delimiter(char c) {
  return is_space(c) || c == '[' || c == ']' || c == '(' || c == ')' || c == '"' || c == ';';
}

bool looks_numeric(std::string_view word) {
  std::size_t i = 0;
  if (word.size() > 1 && word[0] == '-') i = 1;
  if (i >= word.size()) return false;
  const char c = word[i];
  if (!(std::isdigit(static_cast<unsigned char>(c)) || c == '.')) return false;
  double value = 0;
  const auto* first = word.data();
  const auto* last = word.data() + word.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  return ec == std::errc{} && ptr == last;
}

}  // namespace

bool is_operator_lexeme(std::string_view word) {
  for (auto op : kOperators) {
    if (op == word) return true;
  }
  return false;
}

TokenStream tokenize(std::string_view source) {
  TokenStream out;
  std::size_t i = 0;
  const std::size_t n = source.size();

  auto push = [&](TokenKind kind, std::size_t begin, std::size_t end) {
    out.tokens.push_back(Token{kind, std::string(source.substr(begin, end - begin)), {begin, end}});
  };

  while (i < n) {
    const char c = source[i];
    if (is_space(c)) {
      ++i;
      continue;
    }
    if (c == ';') {
      std::size_t end = i;
      while (end < n && source[end] != '\n') ++end;
      std::size_t trimmed = end;
      while (trimmed > i && is_space(source[trimmed - 1])) --trimmed;
      out.comments.push_back(Comment{std::string(source.substr(i, trimmed - i)), {i, end}});
      i = end;
      continue;
    }
    switch (c) {
      case '[': push(TokenKind::open_bracket, i, i + 1); ++i; continue;
      case ']': push(TokenKind::close_bracket, i, i + 1); ++i; continue;
      case '(': push(TokenKind::open_paren, i, i + 1); ++i; continue;
      case ')': push(TokenKind::close_paren, i, i + 1); ++i; continue;
      default: break;
    }
    if (c == '"') {
      std::size_t end = i + 1;
      while (end < n && source[end] != '"' && source[end] != '\n') ++end;
      if (end < n && source[end] == '"') {
        push(TokenKind::string, i, end + 1);
        i = end + 1;
      } else {
        std::size_t line_end = end;
        while (line_end > i + 1 && (source[line_end - 1] == '\r')) --line_end;
        out.diagnostics.push_back(Diagnostic{Severity::error, std::string(code::unterminated_string),
                                             "This string is missing its closing quote.",
                                             {i, line_end}, {}});
        i = end;
      }
      continue;
    }
    std::size_t end = i;
    while (end < n && !is_delimiter(source[end])) ++end;
    const std::string_view word = source.substr(i, end - i);
    TokenKind kind = TokenKind::identifier;
    if (looks_numeric(word)) {
      kind = TokenKind::number;
    } else if (is_operator_lexeme(word)) {
      kind = TokenKind::op;
    }
    push(kind, i, end);
    i = end;
  }
  return out;
}

}  // namespace turtletalk
