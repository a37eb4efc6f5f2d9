#include "turtletalk/ast.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

namespace turtletalk {

std::string lowercase(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string uppercase(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

std::string format_number(double value) {
  if (std::isfinite(value) && value == std::trunc(value) && std::fabs(value) < 1e15) {
    if (value == 0) return "0";
    return std::to_string(static_cast<long long>(value));
  }
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc{}) return "NaN";
  return std::string(buf, ptr);
}

namespace {

void dump(std::ostringstream& os, const Statement& stmt);

void dump_comments(std::ostringstream& os, const std::vector<Comment>& comments) {
  for (const auto& c : comments) os << " {" << c.text << "}";
}

void dump(std::ostringstream& os, const Expr& expr) {
  std::visit(
      [&](const auto& node) {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, NumberLit>) {
          os << "(num " << format_number(node.value) << ")";
        } else if constexpr (std::is_same_v<T, StringLit>) {
          os << "(str \"" << node.value << "\")";
        } else if constexpr (std::is_same_v<T, ColorName>) {
          os << "(color " << lowercase(node.name) << ")";
        } else if constexpr (std::is_same_v<T, Identifier>) {
          os << "(id " << lowercase(node.name) << ")";
        } else if constexpr (std::is_same_v<T, ReporterCall>) {
          os << "(call " << lowercase(node.name);
          for (const auto& a : node.args) {
            os << " ";
            dump(os, a);
          }
          os << ")";
        } else if constexpr (std::is_same_v<T, Block>) {
          os << "(block";
          for (const auto& s : node.statements) {
            os << " ";
            dump(os, s);
          }
          dump_comments(os, node.trailing_comments);
          os << ")";
        } else if constexpr (std::is_same_v<T, Paren>) {
          os << "(paren ";
          dump(os, *node.inner);
          os << ")";
        } else if constexpr (std::is_same_v<T, Binary>) {
          os << "(" << node.op << " ";
          dump(os, *node.lhs);
          os << " ";
          dump(os, *node.rhs);
          os << ")";
        } else {
          os << "(error)";
        }
      },
      expr.node);
}

void dump(std::ostringstream& os, const Statement& stmt) {
  os << "(";
  dump_comments(os, stmt.leading_comments);
  if (!stmt.leading_comments.empty()) os << " ";
  os << lowercase(stmt.name);
  for (const auto& a : stmt.args) {
    os << " ";
    dump(os, a);
  }
  os << ")";
}

}  // namespace

std::string to_sexpr(const Ast& ast) {
  std::ostringstream os;
  os << "(program";
  for (const auto& s : ast.statements) {
    os << " ";
    dump(os, s);
  }
  dump_comments(os, ast.trailing_comments);
  os << ")";
  return os.str();
}

std::string to_sexpr(const Expr& expr) {
  std::ostringstream os;
  dump(os, expr);
  return os.str();
}

bool structurally_equal(const Ast& a, const Ast& b) { return to_sexpr(a) == to_sexpr(b); }

}  // namespace turtletalk
