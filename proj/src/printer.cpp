#include "turtletalk/printer.hpp"

#include <sstream>

namespace turtletalk {

namespace {

class Printer {
 public:
  std::string program(const Ast& ast) {
    for (const auto& stmt : ast.statements) statement(stmt, 0);
    comments(ast.trailing_comments, 0);
    auto text = out_.str();
    if (!text.empty() && text.back() == '\n') text.pop_back();
    return text;
  }

  // Renders an expression on the current line; multi-line blocks continue
  // at `indent`.
  std::string expr(const Expr& e, int indent) {
    return std::visit(
        [&](const auto& node) -> std::string {
          using T = std::decay_t<decltype(node)>;
          if constexpr (std::is_same_v<T, NumberLit>) {
            return format_number(node.value);
          } else if constexpr (std::is_same_v<T, StringLit>) {
            return "\"" + node.value + "\"";
          } else if constexpr (std::is_same_v<T, ColorName> || std::is_same_v<T, Identifier>) {
            return node.name;
          } else if constexpr (std::is_same_v<T, ReporterCall>) {
            std::string s = node.name;
            for (const auto& a : node.args) s += " " + expr(a, indent);
            return s;
          } else if constexpr (std::is_same_v<T, Block>) {
            return block(node, indent);
          } else if constexpr (std::is_same_v<T, Paren>) {
            return "(" + expr(*node.inner, indent) + ")";
          } else if constexpr (std::is_same_v<T, Binary>) {
            return expr(*node.lhs, indent) + " " + node.op + " " + expr(*node.rhs, indent);
          } else {
            return node.text;
          }
        },
        e.node);
  }

 private:
  static std::string pad(int indent) { return std::string(static_cast<std::size_t>(indent) * 2, ' '); }

  void comments(const std::vector<Comment>& list, int indent) {
    for (const auto& c : list) out_ << pad(indent) << c.text << "\n";
  }

  std::string line(const Statement& stmt, int indent) {
    std::string s = stmt.name;
    for (const auto& a : stmt.args) s += " " + expr(a, indent);
    return s;
  }

  void statement(const Statement& stmt, int indent) {
    comments(stmt.leading_comments, indent);
    out_ << pad(indent) << line(stmt, indent) << "\n";
  }

  std::string block(const Block& blk, int indent) {
    if (blk.statements.empty() && blk.trailing_comments.empty()) return "[ ]";
    if (blk.statements.size() == 1 && blk.trailing_comments.empty() && blk.statements[0].leading_comments.empty()) {
      auto inner = line(blk.statements[0], indent);
      if (inner.find('\n') == std::string::npos) return "[ " + inner + " ]";
    }
    Printer nested;
    for (const auto& stmt : blk.statements) nested.statement(stmt, indent + 1);
    nested.comments(blk.trailing_comments, indent + 1);
    return "[\n" + nested.out_.str() + pad(indent) + "]";
  }

  std::ostringstream out_;
};

}  // namespace

std::string pretty_print(const Ast& ast) { return Printer().program(ast); }

std::string print_expr(const Expr& expr) { return Printer().expr(expr, 0); }

}  // namespace turtletalk
