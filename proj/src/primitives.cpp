#include "turtletalk/primitives.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "embedded_data.hpp"

namespace turtletalk {

using nlohmann::json;

std::string_view to_string(AgentContext context) {
  switch (context) {
    case AgentContext::observer: return "observer";
    case AgentContext::turtle: return "turtle";
    case AgentContext::patch: return "patch";
    case AgentContext::link: return "link";
  }
  return "observer";
}

std::optional<AgentContext> parse_agent_context(std::string_view text) {
  if (text == "observer") return AgentContext::observer;
  if (text == "turtle") return AgentContext::turtle;
  if (text == "patch") return AgentContext::patch;
  if (text == "link") return AgentContext::link;
  return std::nullopt;
}

std::string_view to_string(SemanticType type) {
  switch (type) {
    case SemanticType::number: return "number";
    case SemanticType::agentset: return "agentset";
    case SemanticType::block: return "block";
    case SemanticType::value: return "value";
    case SemanticType::variable_name: return "variable-name";
    case SemanticType::string: return "string";
    case SemanticType::boolean: return "boolean";
  }
  return "value";
}

namespace {

std::optional<SemanticType> parse_type(std::string_view text) {
  for (auto t : {SemanticType::number, SemanticType::agentset, SemanticType::block, SemanticType::value,
                 SemanticType::variable_name, SemanticType::string, SemanticType::boolean}) {
    if (to_string(t) == text) return t;
  }
  return std::nullopt;
}

std::string_view plural_label(AgentContext c) {
  switch (c) {
    case AgentContext::observer: return "Observer";
    case AgentContext::turtle: return "Turtles";
    case AgentContext::patch: return "Patches";
    case AgentContext::link: return "Links";
  }
  return "Observer";
}

template <class F>
std::string join(const std::vector<std::string>& items, std::string_view sep, F&& f) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += f(items[i]);
  }
  return out;
}

}  // namespace

std::size_t PrimitiveSpec::required_arity() const {
  std::size_t n = 0;
  for (const auto& p : params) {
    if (!p.optional) ++n;
  }
  return n;
}

PrimitiveRegistry PrimitiveRegistry::from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw RegistryError(std::string("registry is not valid JSON: ") + e.what());
  }
  PrimitiveRegistry reg;
  try {
    const auto colors = doc.value("colors", json::object());
    for (auto it = colors.begin(); it != colors.end(); ++it) {
      reg.colors_[lowercase(it.key())] = it.value().get<double>();
    }
    for (const auto& rec : doc.at("primitives")) {
      PrimitiveSpec spec;
      spec.name = lowercase(rec.at("name").get<std::string>());
      const auto kind = rec.at("kind").get<std::string>();
      if (kind == "command") {
        spec.kind = PrimitiveKind::command;
      } else if (kind == "reporter") {
        spec.kind = PrimitiveKind::reporter;
      } else if (kind == "declaration") {
        spec.kind = PrimitiveKind::declaration;
      } else {
        throw RegistryError("primitive " + spec.name + ": unknown kind '" + kind + "'");
      }
      for (const auto& p : rec.value("params", json::array())) {
        auto type = parse_type(p.at("type").get<std::string>());
        if (!type) throw RegistryError("primitive " + spec.name + ": unknown param type");
        spec.params.push_back(ParamSpec{*type, p.value("optional", false)});
      }
      if (rec.contains("result")) {
        auto type = parse_type(rec["result"].get<std::string>());
        if (!type) throw RegistryError("primitive " + spec.name + ": unknown result type");
        spec.result = *type;
      }
      for (const auto& c : rec.at("contexts")) {
        auto ctx = parse_agent_context(c.get<std::string>());
        if (!ctx) throw RegistryError("primitive " + spec.name + ": unknown context");
        spec.contexts.insert(*ctx);
      }
      spec.settable = rec.value("settable", false);
      if (rec.contains("agent_kind")) spec.agent_kind = rec["agent_kind"].get<std::string>();
      if (rec.contains("block_context")) spec.block_context = rec["block_context"].get<std::string>();
      spec.summary = rec.value("summary", "");
      for (const auto& s : rec.value("see_also", json::array())) spec.see_also.push_back(lowercase(s.get<std::string>()));
      spec.supported = rec.value("supported", true);

      if (spec.contexts.empty()) throw RegistryError("primitive " + spec.name + ": no legal contexts");
      if (spec.kind == PrimitiveKind::command && spec.result) {
        throw RegistryError("command " + spec.name + " must not declare a result");
      }
      if (spec.kind == PrimitiveKind::reporter && !spec.result) {
        throw RegistryError("reporter " + spec.name + " must declare a result");
      }
      for (std::size_t i = 0; i + 1 < spec.params.size(); ++i) {
        if (spec.params[i].optional) throw RegistryError("primitive " + spec.name + ": only the last param may be optional");
      }
      auto key = spec.name;
      if (!reg.primitives_.emplace(key, std::move(spec)).second) {
        throw RegistryError("duplicate primitive " + key);
      }
    }
  } catch (const json::exception& e) {
    throw RegistryError(std::string("malformed registry record: ") + e.what());
  }
  for (const auto& [name, spec] : reg.primitives_) {
    for (const auto& ref : spec.see_also) {
      if (!reg.primitives_.count(ref)) throw RegistryError("primitive " + name + ": see-also '" + ref + "' is undefined");
    }
  }
  return reg;
}

PrimitiveRegistry PrimitiveRegistry::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RegistryError("cannot open registry file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::shared_ptr<const PrimitiveRegistry> PrimitiveRegistry::builtin() {
  static const auto registry = std::make_shared<const PrimitiveRegistry>(from_json(embedded::primitives_json));
  return registry;
}

const PrimitiveSpec* PrimitiveRegistry::lookup(std::string_view name) const {
  auto it = primitives_.find(lowercase(name));
  return it == primitives_.end() ? nullptr : &it->second;
}

std::optional<double> PrimitiveRegistry::color(std::string_view name) const {
  auto it = colors_.find(lowercase(name));
  if (it == colors_.end()) return std::nullopt;
  return it->second;
}

std::string HelpEntry::render() const {
  std::string out = name + " - " + join(context_names, ", ", [](const std::string& s) { return s; }) + "\n";
  out += summary + " (full text)\n";
  out += "See also: " + join(see_also, ", ", [](const std::string& s) { return s; });
  return out;
}

std::optional<HelpEntry> help(std::string_view name, const PrimitiveRegistry& registry) {
  const auto* spec = registry.lookup(name);
  if (!spec) return std::nullopt;
  HelpEntry entry;
  entry.name = spec->name;
  for (auto c : spec->contexts) entry.context_names.emplace_back(plural_label(c));
  entry.summary = spec->summary;
  entry.see_also = spec->see_also;
  return entry;
}

std::string format_context_list(const std::set<AgentContext>& contexts) {
  std::string out;
  for (auto c : contexts) {
    if (!out.empty()) out += "/";
    out += to_string(c);
  }
  return out;
}

std::string context_error_message(const PrimitiveSpec& spec, AgentContext context) {
  const auto upper = uppercase(spec.name);
  const std::string_view article = context == AgentContext::observer ? "an" : "a";
  return "You can't use " + upper + " in " + std::string(article) + " " + std::string(to_string(context)) +
         " context, because " + upper + " is " +
         format_context_list(spec.contexts) + "-only.";
}

std::optional<AgentContext> infer_agent_kind(const Expr& expr, const PrimitiveRegistry& registry) {
  if (const auto* paren = std::get_if<Paren>(&expr.node)) return infer_agent_kind(*paren->inner, registry);
  std::string name;
  const std::vector<Expr>* args = nullptr;
  if (const auto* id = std::get_if<Identifier>(&expr.node)) {
    name = id->name;
  } else if (const auto* call = std::get_if<ReporterCall>(&expr.node)) {
    name = call->name;
    args = &call->args;
  } else {
    return std::nullopt;
  }
  const auto* spec = registry.lookup(name);
  if (!spec || spec->result != SemanticType::agentset || !spec->agent_kind) return std::nullopt;
  if (*spec->agent_kind == "inherit") {
    if (!args || args->empty()) return std::nullopt;
    return infer_agent_kind(args->front(), registry);
  }
  return parse_agent_context(*spec->agent_kind);
}

namespace {

class ContextChecker {
 public:
  explicit ContextChecker(const PrimitiveRegistry& registry) : registry_(registry) {}

  std::vector<Diagnostic> run(const Ast& ast, AgentContext start) {
    for (const auto& stmt : ast.statements) statement(stmt, start);
    return std::move(diags_);
  }

 private:
  void report(std::string_view code, std::string message, Span span, std::vector<std::string> related = {}) {
    diags_.push_back(Diagnostic{Severity::error, std::string(code), std::move(message), span, std::move(related)});
  }

  void require_context(const PrimitiveSpec& spec, AgentContext ctx, Span span) {
    if (!spec.contexts.count(ctx)) report(code::context_error, context_error_message(spec, ctx), span, {spec.name});
  }

  // Statically known type of an expression; nullopt when unknown.
  std::optional<SemanticType> type_of(const Expr& expr) const {
    return std::visit(
        [&](const auto& node) -> std::optional<SemanticType> {
          using T = std::decay_t<decltype(node)>;
          if constexpr (std::is_same_v<T, NumberLit> || std::is_same_v<T, ColorName>) {
            return SemanticType::number;
          } else if constexpr (std::is_same_v<T, StringLit>) {
            return SemanticType::string;
          } else if constexpr (std::is_same_v<T, Identifier> || std::is_same_v<T, ReporterCall>) {
            const auto* spec = registry_.lookup(node.name);
            return spec ? spec->result : std::nullopt;
          } else if constexpr (std::is_same_v<T, Block>) {
            return SemanticType::block;
          } else if constexpr (std::is_same_v<T, Paren>) {
            return type_of(*node.inner);
          } else if constexpr (std::is_same_v<T, Binary>) {
            if (node.op == "+" || node.op == "-" || node.op == "*" || node.op == "/") return SemanticType::number;
            return SemanticType::boolean;
          } else {
            return std::nullopt;
          }
        },
        expr.node);
  }

  static std::string describe(SemanticType t) {
    switch (t) {
      case SemanticType::number: return "a number";
      case SemanticType::agentset: return "an agentset";
      case SemanticType::string: return "a string";
      case SemanticType::boolean: return "true/false";
      case SemanticType::block: return "a block";
      default: return "a value";
    }
  }

  void expect_type(const std::string& owner, SemanticType want, const Expr& arg) {
    auto got = type_of(arg);
    if (!got || *got == want || *got == SemanticType::value) return;
    report(code::type_mismatch,
           uppercase(owner) + " expected input to be " + describe(want) + " but got " + describe(*got) + " instead.",
           arg.span);
  }

  void expression(const Expr& expr, AgentContext ctx) {
    std::visit(
        [&](const auto& node) {
          using T = std::decay_t<decltype(node)>;
          if constexpr (std::is_same_v<T, Identifier>) {
            if (const auto* spec = registry_.lookup(node.name)) require_context(*spec, ctx, expr.span);
          } else if constexpr (std::is_same_v<T, ReporterCall>) {
            const auto* spec = registry_.lookup(node.name);
            if (!spec) return;
            require_context(*spec, ctx, Span{expr.span.begin, expr.span.begin + node.name.size()});
            arguments(*spec, node.args, ctx);
          } else if constexpr (std::is_same_v<T, Paren>) {
            expression(*node.inner, ctx);
          } else if constexpr (std::is_same_v<T, Binary>) {
            expression(*node.lhs, ctx);
            expression(*node.rhs, ctx);
            if (node.op != "=" && node.op != "!=") {
              expect_type(node.op, SemanticType::number, *node.lhs);
              expect_type(node.op, SemanticType::number, *node.rhs);
            }
          } else if constexpr (std::is_same_v<T, Block>) {
            for (const auto& s : node.statements) statement(s, ctx);
          }
        },
        expr.node);
  }

  void arguments(const PrimitiveSpec& spec, const std::vector<Expr>& args, AgentContext ctx) {
    for (std::size_t i = 0; i < args.size() && i < spec.params.size(); ++i) {
      const auto& param = spec.params[i];
      const auto& arg = args[i];
      switch (param.type) {
        case SemanticType::variable_name:
          if (const auto* id = std::get_if<Identifier>(&arg.node)) {
            if (const auto* var = registry_.lookup(id->name)) require_context(*var, ctx, arg.span);
          }
          break;
        case SemanticType::block: {
          const auto* block = std::get_if<Block>(&arg.node);
          if (!block) break;
          std::optional<AgentContext> inner;
          if (spec.block_context == "agentset") {
            if (!args.empty()) inner = infer_agent_kind(args.front(), registry_);
          } else if (spec.block_context) {
            inner = parse_agent_context(*spec.block_context);
          } else {
            inner = ctx;
          }
          if (inner) {
            for (const auto& s : block->statements) statement(s, *inner);
          }
          break;
        }
        case SemanticType::agentset:
          expression(arg, ctx);
          if (std::holds_alternative<ErrorExpr>(arg.node)) break;
          if (!infer_agent_kind(arg, registry_)) {
            auto got = type_of(arg);
            report(code::type_mismatch,
                   uppercase(spec.name) + " expected input to be an agent or agentset but got " +
                       (got ? describe(*got) : std::string("something else")) + " instead.",
                   arg.span);
          }
          break;
        case SemanticType::number:
          expression(arg, ctx);
          expect_type(spec.name, SemanticType::number, arg);
          break;
        default:
          expression(arg, ctx);
          // `set var value`: the value must fit the variable's type.
          if (i > 0 && spec.params[i - 1].type == SemanticType::variable_name) {
            if (const auto* id = std::get_if<Identifier>(&args[i - 1].node)) {
              const auto* var = registry_.lookup(id->name);
              if (var && var->result && *var->result != SemanticType::value) {
                expect_type(spec.name, *var->result, arg);
              }
            }
          }
          break;
      }
    }
  }

  void statement(const Statement& stmt, AgentContext ctx) {
    const auto* spec = registry_.lookup(stmt.name);
    if (!spec) return;
    require_context(*spec, ctx, Span{stmt.span.begin, stmt.span.begin + stmt.name.size()});
    arguments(*spec, stmt.args, ctx);
  }

  const PrimitiveRegistry& registry_;
  std::vector<Diagnostic> diags_;
};

}  // namespace

std::vector<Diagnostic> check_context(const Ast& ast, AgentContext start, const PrimitiveRegistry& registry) {
  return ContextChecker(registry).run(ast, start);
}

}  // namespace turtletalk
