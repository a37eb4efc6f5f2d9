#pragma once

#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "turtletalk/diagnostic.hpp"
#include "turtletalk/lexer.hpp"

namespace turtletalk {

/// Owning pointer with value semantics, for recursive variant members.
template <class T>
class Box {
 public:
  Box(T value) : ptr_(std::make_unique<T>(std::move(value))) {}  // NOLINT(google-explicit-constructor)
  Box(const Box& other) : ptr_(std::make_unique<T>(*other.ptr_)) {}
  Box(Box&&) noexcept = default;
  Box& operator=(const Box& other) {
    if (this != &other) ptr_ = std::make_unique<T>(*other.ptr_);
    return *this;
  }
  Box& operator=(Box&&) noexcept = default;
  ~Box() = default;

  T& operator*() { return *ptr_; }
  const T& operator*() const { return *ptr_; }
  T* operator->() { return ptr_.get(); }
  const T* operator->() const { return ptr_.get(); }

 private:
  std::unique_ptr<T> ptr_;
};

struct Expr;
struct Statement;

struct NumberLit {
  double value = 0;
};

struct StringLit {
  std::string value;
};

struct ColorName {
  std::string name;  // as written
  double value = 0;
};

/// A bare name: an agentset (`turtles`), an agent variable (`color`), or a
/// zero-argument reporter (`random-xcor`).
struct Identifier {
  std::string name;  // as written
};

struct ReporterCall {
  std::string name;  // as written
  std::vector<Expr> args;
};

struct Block {
  std::vector<Statement> statements;
  std::vector<Comment> trailing_comments;
};

struct Paren {
  Box<Expr> inner;
};

struct Binary {
  std::string op;
  Box<Expr> lhs;
  Box<Expr> rhs;
};

/// Placeholder left by error recovery. Never present in a clean parse.
struct ErrorExpr {
  std::string text;
};

struct Expr {
  using Node =
      std::variant<NumberLit, StringLit, ColorName, Identifier, ReporterCall, Block, Paren, Binary, ErrorExpr>;
  Node node;
  Span span;
};

struct Statement {
  std::string name;  // command as written; registry lookup is case-insensitive
  std::vector<Expr> args;
  Span span;
  std::vector<Comment> leading_comments;
};

struct Ast {
  std::vector<Statement> statements;
  std::vector<Comment> trailing_comments;
  Span span;
};

/// Span-free S-expression dump. Two trees are structurally equal iff their
/// dumps are equal.
std::string to_sexpr(const Ast& ast);
std::string to_sexpr(const Expr& expr);

bool structurally_equal(const Ast& a, const Ast& b);

std::string lowercase(std::string_view text);
std::string uppercase(std::string_view text);

/// Integers print without a decimal point; everything else in shortest
/// round-trip form.
std::string format_number(double value);

}  // namespace turtletalk
