#include "turtletalk/parser.hpp"

#include <charconv>
#include <optional>

namespace turtletalk {

namespace {

int precedence(std::string_view op) {
  if (op == "*" || op == "/") return 3;
  if (op == "+" || op == "-") return 2;
  return 1;  // comparisons
}

std::string inputs_phrase(std::size_t n) { return std::to_string(n) + (n == 1 ? " input." : " inputs."); }

class Parser {
 public:
  Parser(const TokenStream& stream, const PrimitiveRegistry& registry)
      : toks_(stream.tokens), comments_(stream.comments), registry_(registry) {}

  ParseResult run() {
    ParseResult out;
    while (!at_end()) {
      if (peek().kind == TokenKind::close_bracket || peek().kind == TokenKind::close_paren) {
        stray_closer();
        continue;
      }
      if (auto stmt = statement()) out.ast.statements.push_back(std::move(*stmt));
    }
    out.ast.trailing_comments = take_comments_before(SIZE_MAX);
    if (!toks_.empty()) out.ast.span = {toks_.front().span.begin, toks_.back().span.end};
    out.diagnostics = std::move(diags_);
    return out;
  }

 private:
  bool at_end() const { return pos_ >= toks_.size(); }
  const Token& peek() const { return toks_[pos_]; }
  const Token& advance() {
    last_end_ = toks_[pos_].span.end;
    return toks_[pos_++];
  }
  std::size_t source_end() const { return toks_.empty() ? 0 : toks_.back().span.end; }

  void report(std::string_view code, std::string message, Span span, std::vector<std::string> related = {}) {
    diags_.push_back(Diagnostic{Severity::error, std::string(code), std::move(message), span, std::move(related)});
  }

  std::vector<Comment> take_comments_before(std::size_t offset) {
    std::vector<Comment> out;
    while (comment_pos_ < comments_.size() && comments_[comment_pos_].span.begin < offset) {
      out.push_back(comments_[comment_pos_++]);
    }
    return out;
  }

  bool starts_command(const Token& tok) const {
    if (tok.kind != TokenKind::identifier) return false;
    const auto* spec = registry_.lookup(tok.lexeme);
    return spec && spec->kind == PrimitiveKind::command;
  }

  void stray_closer() {
    const auto& tok = advance();
    report(code::unbalanced_block,
           tok.kind == TokenKind::close_bracket ? "This closing bracket has no matching opening bracket."
                                                : "This closing parenthesis has no matching opening parenthesis.",
           tok.span);
  }

  // Skips a balanced [...] or (...) group starting at the current token.
  void skip_group() {
    int depth = 0;
    while (!at_end()) {
      const auto kind = advance().kind;
      if (kind == TokenKind::open_bracket || kind == TokenKind::open_paren) ++depth;
      if (kind == TokenKind::close_bracket || kind == TokenKind::close_paren) --depth;
      if (depth <= 0) return;
    }
  }

  // Resynchronizes at the next statement start or the enclosing block's end.
  void recover() {
    while (!at_end()) {
      const auto& tok = peek();
      if (tok.kind == TokenKind::close_bracket) return;
      if (starts_command(tok)) return;
      if (tok.kind == TokenKind::open_bracket || tok.kind == TokenKind::open_paren) {
        skip_group();
      } else {
        advance();
      }
    }
  }

  std::optional<Statement> statement() {
    const auto& head = peek();
    if (head.kind != TokenKind::identifier) {
      report(code::expected_command, "Expected a command here, but found " + head.lexeme + ".", head.span);
      advance();
      recover();
      return std::nullopt;
    }
    const auto* spec = registry_.lookup(head.lexeme);
    if (!spec) {
      report(code::unknown_primitive, "Nothing named " + uppercase(head.lexeme) + " has been defined.", head.span,
             {lowercase(head.lexeme)});
      advance();
      recover();
      return std::nullopt;
    }
    if (!spec->supported || spec->kind == PrimitiveKind::declaration) {
      report(code::unsupported_primitive, uppercase(spec->name) + " can't be used in the command center.", head.span,
             {spec->name});
      advance();
      recover();
      return std::nullopt;
    }
    if (spec->kind != PrimitiveKind::command) {
      report(code::expected_command,
             "Expected a command here, but " + uppercase(spec->name) + " is a reporter.", head.span, {spec->name});
      advance();
      recover();
      return std::nullopt;
    }

    Statement stmt;
    stmt.leading_comments = take_comments_before(head.span.begin);
    stmt.name = head.lexeme;
    const Span name_span = head.span;
    advance();

    for (const auto& param : spec->params) {
      if (param.optional) {
        if (!at_end() && peek().kind == TokenKind::open_bracket) stmt.args.push_back(block());
        continue;
      }
      if (missing_here()) {
        report(code::missing_argument, uppercase(spec->name) + " expected " + inputs_phrase(spec->required_arity()),
               name_span, {spec->name});
        return std::nullopt;
      }
      if (param.type == SemanticType::block) {
        if (peek().kind != TokenKind::open_bracket) {
          report(code::missing_argument, uppercase(spec->name) + " expected a block of commands in brackets.",
                 peek().span, {spec->name});
          recover();
          return std::nullopt;
        }
        stmt.args.push_back(block());
      } else if (param.type == SemanticType::variable_name) {
        stmt.args.push_back(variable(*spec));
      } else {
        stmt.args.push_back(expression(0, *spec));
      }
    }
    stmt.span = {name_span.begin, last_end_};
    return stmt;
  }

  // True where an argument should start but cannot.
  bool missing_here() const {
    if (at_end()) return true;
    const auto& tok = peek();
    return tok.kind == TokenKind::close_bracket || tok.kind == TokenKind::close_paren || starts_command(tok);
  }

  Expr variable(const PrimitiveSpec& owner) {
    const auto& tok = peek();
    if (tok.kind == TokenKind::identifier) {
      const auto* spec = registry_.lookup(tok.lexeme);
      if (spec && spec->settable) {
        advance();
        return Expr{Identifier{tok.lexeme}, tok.span};
      }
    }
    report(code::expected_variable, uppercase(owner.name) + " expected a variable name here, but found " + tok.lexeme + ".",
           tok.span, {owner.name});
    const Span span = tok.span;
    if (tok.kind == TokenKind::open_bracket || tok.kind == TokenKind::open_paren) {
      skip_group();
    } else {
      advance();
    }
    return Expr{ErrorExpr{}, {span.begin, last_end_}};
  }

  Expr block() {
    const Span open = advance().span;
    Block blk;
    while (true) {
      if (at_end()) {
        report(code::unbalanced_block, "This opening bracket has no matching closing bracket.", {open.begin, source_end()});
        blk.trailing_comments = take_comments_before(SIZE_MAX);
        return Expr{std::move(blk), {open.begin, source_end()}};
      }
      if (peek().kind == TokenKind::close_bracket) break;
      if (peek().kind == TokenKind::close_paren) {
        stray_closer();
        continue;
      }
      if (auto stmt = statement()) blk.statements.push_back(std::move(*stmt));
    }
    const Span close = peek().span;
    blk.trailing_comments = take_comments_before(close.begin);
    advance();
    return Expr{std::move(blk), {open.begin, close.end}};
  }

  Expr expression(int min_prec, const PrimitiveSpec& owner) {
    Expr lhs = operand(owner);
    while (!at_end() && peek().kind == TokenKind::op && precedence(peek().lexeme) >= min_prec) {
      const auto op = advance().lexeme;
      const int prec = precedence(op);
      Expr rhs = missing_here() ? missing_operand(op) : expression(prec + 1, owner);
      const Span span = lhs.span.merge(rhs.span);
      lhs = Expr{Binary{op, std::move(lhs), std::move(rhs)}, span};
    }
    return lhs;
  }

  Expr missing_operand(const std::string& op) {
    const Span span{last_end_, last_end_};
    report(code::missing_argument, op + " expected 2 inputs.", span);
    return Expr{ErrorExpr{}, span};
  }

  // A single operand: literal, parenthesized expression or reporter call.
  // Reporter arguments bind tighter than infix operators.
  Expr operand(const PrimitiveSpec& owner) {
    const Token& tok = peek();
    switch (tok.kind) {
      case TokenKind::number: {
        advance();
        double value = 0;
        std::from_chars(tok.lexeme.data(), tok.lexeme.data() + tok.lexeme.size(), value);
        return Expr{NumberLit{value}, tok.span};
      }
      case TokenKind::string:
        advance();
        return Expr{StringLit{tok.lexeme.substr(1, tok.lexeme.size() - 2)}, tok.span};
      case TokenKind::open_paren: {
        const Span open = advance().span;
        if (missing_here()) {
          report(code::missing_argument, "Expected a value inside the parentheses.", open);
          recover_paren();
          return Expr{ErrorExpr{}, {open.begin, last_end_}};
        }
        Expr inner = expression(0, owner);
        if (at_end() || peek().kind != TokenKind::close_paren) {
          report(code::unbalanced_block, "This opening parenthesis has no matching closing parenthesis.", open);
          return Expr{Paren{std::move(inner)}, {open.begin, last_end_}};
        }
        advance();
        return Expr{Paren{std::move(inner)}, {open.begin, last_end_}};
      }
      case TokenKind::open_bracket: {
        report(code::unexpected_block, "A block of commands is not allowed here.", tok.span, {owner.name});
        const Span start = tok.span;
        skip_group();
        return Expr{ErrorExpr{}, {start.begin, last_end_}};
      }
      case TokenKind::op:
        advance();
        report(code::missing_argument, "Expected a value here, but found " + tok.lexeme + ".", tok.span);
        return Expr{ErrorExpr{tok.lexeme}, tok.span};
      case TokenKind::close_bracket:
      case TokenKind::close_paren:
        break;
      case TokenKind::identifier:
        return identifier_operand();
    }
    report(code::missing_argument, uppercase(owner.name) + " expected " + inputs_phrase(owner.required_arity()),
           tok.span, {owner.name});
    return Expr{ErrorExpr{}, {tok.span.begin, tok.span.begin}};
  }

  void recover_paren() {
    while (!at_end() && peek().kind != TokenKind::close_paren && peek().kind != TokenKind::close_bracket &&
           !starts_command(peek())) {
      advance();
    }
    if (!at_end() && peek().kind == TokenKind::close_paren) advance();
  }

  Expr identifier_operand() {
    const Token& tok = advance();
    if (auto value = registry_.color(tok.lexeme)) return Expr{ColorName{tok.lexeme, *value}, tok.span};
    const auto* spec = registry_.lookup(tok.lexeme);
    if (!spec) {
      report(code::unknown_primitive, "Nothing named " + uppercase(tok.lexeme) + " has been defined.", tok.span,
             {lowercase(tok.lexeme)});
      return Expr{ErrorExpr{tok.lexeme}, tok.span};
    }
    if (!spec->supported || spec->kind != PrimitiveKind::reporter) {
      report(code::unsupported_primitive, uppercase(spec->name) + " can't be used here.", tok.span, {spec->name});
      return Expr{ErrorExpr{tok.lexeme}, tok.span};
    }
    if (spec->params.empty()) return Expr{Identifier{tok.lexeme}, tok.span};

    ReporterCall call{tok.lexeme, {}};
    for (const auto& param : spec->params) {
      if (missing_here()) {
        report(code::missing_argument, uppercase(spec->name) + " expected " + inputs_phrase(spec->required_arity()),
               tok.span, {spec->name});
        call.args.push_back(Expr{ErrorExpr{}, {last_end_, last_end_}});
        continue;
      }
      if (param.type == SemanticType::variable_name) {
        call.args.push_back(variable(*spec));
      } else {
        call.args.push_back(operand(*spec));
      }
    }
    return Expr{std::move(call), {tok.span.begin, last_end_}};
  }

  const std::vector<Token>& toks_;
  const std::vector<Comment>& comments_;
  const PrimitiveRegistry& registry_;
  std::size_t pos_ = 0;
  std::size_t comment_pos_ = 0;
  std::size_t last_end_ = 0;
  std::vector<Diagnostic> diags_;
};

}  // namespace

ParseResult parse(const TokenStream& tokens, const PrimitiveRegistry& registry) {
  return Parser(tokens, registry).run();
}

Analysis analyze(std::string_view source, const PrimitiveRegistry& registry, AgentContext context) {
  Analysis out;
  out.tokens = tokenize(source);
  if (!out.tokens.ok()) {
    out.diagnostics = out.tokens.diagnostics;
    return out;
  }
  auto parsed = parse(out.tokens, registry);
  out.ast = std::move(parsed.ast);
  out.diagnostics = std::move(parsed.diagnostics);
  auto ctx = check_context(out.ast, context, registry);
  out.diagnostics.insert(out.diagnostics.end(), ctx.begin(), ctx.end());
  return out;
}

}  // namespace turtletalk
