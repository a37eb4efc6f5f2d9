#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "turtletalk/ast.hpp"
#include "turtletalk/diagnostic.hpp"

namespace turtletalk {

enum class AgentContext { observer, turtle, patch, link };

std::string_view to_string(AgentContext context);
std::optional<AgentContext> parse_agent_context(std::string_view text);

enum class PrimitiveKind { command, reporter, declaration };

enum class SemanticType { number, agentset, block, value, variable_name, string, boolean };

std::string_view to_string(SemanticType type);

struct ParamSpec {
  SemanticType type = SemanticType::value;
  bool optional = false;  // only a trailing block may be optional
};

struct PrimitiveSpec {
  std::string name;  // canonical lowercase
  PrimitiveKind kind = PrimitiveKind::command;
  std::vector<ParamSpec> params;
  std::optional<SemanticType> result;
  std::set<AgentContext> contexts;
  bool settable = false;
  /// For agentset reporters: the kind of agent the set holds. "inherit" means
  /// the result holds whatever its first argument holds.
  std::optional<std::string> agent_kind;
  /// Context a block argument runs under: a fixed context name, or
  /// "agentset" for the kind held by the first argument.
  std::optional<std::string> block_context;
  std::string summary;
  std::vector<std::string> see_also;
  /// Listed for help and cross-reference only; the parser rejects it.
  bool supported = true;

  std::size_t required_arity() const;
};

struct HelpEntry {
  std::string name;
  std::vector<std::string> context_names;  // e.g. {"Turtles", "Links"}
  std::string summary;
  std::vector<std::string> see_also;

  /// Three-line rendering used by the command center.
  std::string render() const;
};

class RegistryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Immutable after construction; safe to share across threads.
class PrimitiveRegistry {
 public:
  /// Parses the declarative registry format (see docs/primitives-format.md).
  static PrimitiveRegistry from_json(std::string_view text);
  static PrimitiveRegistry load_file(const std::string& path);
  /// The registry compiled in from data/primitives.json.
  static std::shared_ptr<const PrimitiveRegistry> builtin();

  const PrimitiveSpec* lookup(std::string_view name) const;
  std::optional<double> color(std::string_view name) const;

  const std::map<std::string, PrimitiveSpec>& primitives() const { return primitives_; }
  const std::map<std::string, double>& colors() const { return colors_; }

 private:
  std::map<std::string, PrimitiveSpec> primitives_;
  std::map<std::string, double> colors_;
};

std::optional<HelpEntry> help(std::string_view name, const PrimitiveRegistry& registry);

/// `turtle/link` style list used in context error messages.
std::string format_context_list(const std::set<AgentContext>& contexts);

/// Verifies every primitive reference is legal in its enclosing agent
/// context and that agentset arguments have a known agent kind.
std::vector<Diagnostic> check_context(const Ast& ast, AgentContext start, const PrimitiveRegistry& registry);

std::string context_error_message(const PrimitiveSpec& spec, AgentContext context);

/// Agent kind held by an agentset-valued expression, if statically known.
std::optional<AgentContext> infer_agent_kind(const Expr& expr, const PrimitiveRegistry& registry);

}  // namespace turtletalk
