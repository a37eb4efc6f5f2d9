#pragma once

#include <string>

#include "turtletalk/ast.hpp"

namespace turtletalk {

/// Canonical source for an Ast: one statement per line, two-space block
/// indentation, leading comments on their own lines above the statement.
/// A block holding a single comment-free one-line statement stays inline
/// (`[ fd 1 ]`). parse(pretty_print(ast)) reproduces ast structurally.
std::string pretty_print(const Ast& ast);

std::string print_expr(const Expr& expr);

}  // namespace turtletalk
