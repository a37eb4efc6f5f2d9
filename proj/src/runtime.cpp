#include "turtletalk/runtime.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <variant>

namespace turtletalk {

namespace {

double wrap_range(double v, double lo, double width) {
  double r = std::fmod(v - lo, width);
  if (r < 0) r += width;
  if (r >= width) r = 0;
  return lo + r;
}

}  // namespace

double normalize_heading(double heading) {
  double h = std::fmod(heading, 360.0);
  if (h < 0) h += 360.0;
  if (h >= 360.0) h = 0;
  return h;
}

double wrap_color(double color) {
  double c = std::fmod(color, 140.0);
  if (c < 0) c += 140.0;
  if (c >= 140.0) c = 0;
  return c;
}

std::size_t World::patch_index(int pxcor, int pycor) const {
  return static_cast<std::size_t>(bounds.max_pycor - pycor) * static_cast<std::size_t>(bounds.width()) +
         static_cast<std::size_t>(pxcor - bounds.min_pxcor);
}

std::size_t World::patch_at(double x, double y) const {
  const int px = std::min(static_cast<int>(std::floor(wrap_x(x) + 0.5)), bounds.max_pxcor);
  const int py = std::min(static_cast<int>(std::floor(wrap_y(y) + 0.5)), bounds.max_pycor);
  return patch_index(px, py);
}

int World::patch_x(std::size_t index) const {
  return bounds.min_pxcor + static_cast<int>(index % static_cast<std::size_t>(bounds.width()));
}

int World::patch_y(std::size_t index) const {
  return bounds.max_pycor - static_cast<int>(index / static_cast<std::size_t>(bounds.width()));
}

double World::wrap_x(double x) const { return wrap_range(x, bounds.min_pxcor - 0.5, bounds.width()); }
double World::wrap_y(double y) const { return wrap_range(y, bounds.min_pycor - 0.5, bounds.height()); }

World new_world(const WorldBounds& bounds, std::uint64_t seed) {
  if (bounds.min_pxcor > bounds.max_pxcor || bounds.min_pycor > bounds.max_pycor) {
    throw std::invalid_argument("world bounds are inverted");
  }
  World w;
  w.bounds = bounds;
  w.patches.assign(static_cast<std::size_t>(bounds.width()) * static_cast<std::size_t>(bounds.height()), 0.0);
  w.rng = Pcg32(seed);
  return w;
}

namespace {

struct AgentSet {
  AgentContext kind = AgentContext::turtle;
  std::vector<std::int64_t> members;  // turtle ids or patch indices, ascending
};

using Value = std::variant<double, std::string, bool, AgentSet>;

struct Agent {
  AgentContext context = AgentContext::observer;
  std::int64_t id = 0;  // turtle id or patch index
};

struct RuntimeError {
  Diagnostic diagnostic;
};

class Interpreter {
 public:
  Interpreter(World& world, const PrimitiveRegistry& registry) : world_(world), registry_(registry) {}

  void run(const Ast& ast) { run_statements(ast.statements, Agent{}); }

  std::vector<std::string> lines;

 private:
  [[noreturn]] void fail(std::string_view code, std::string message, Span span, const std::string& name = {}) {
    std::vector<std::string> related;
    if (!name.empty()) related.push_back(name);
    throw RuntimeError{Diagnostic{Severity::error, std::string(code), std::move(message), span, std::move(related)}};
  }

  const PrimitiveSpec& spec_for(const std::string& name, AgentContext ctx, Span span) {
    const auto* spec = registry_.lookup(name);
    if (!spec) fail(code::unknown_primitive, "Nothing named " + uppercase(name) + " has been defined.", span);
    if (!spec->contexts.count(ctx)) fail(code::context_error, context_error_message(*spec, ctx), span, spec->name);
    return *spec;
  }

  bool alive(const Agent& agent) const {
    return agent.context != AgentContext::turtle || world_.turtles.count(agent.id) != 0;
  }

  Turtle& turtle(const Agent& agent) { return world_.turtles.at(agent.id); }

  std::size_t patch_of(const Agent& agent) {
    if (agent.context == AgentContext::patch) return static_cast<std::size_t>(agent.id);
    const auto& t = turtle(agent);
    return world_.patch_at(t.xcor, t.ycor);
  }

  void run_statements(const std::vector<Statement>& statements, const Agent& agent) {
    for (const auto& stmt : statements) {
      if (!alive(agent)) return;
      run_statement(stmt, agent);
    }
  }

  double number(const Value& v, const std::string& owner, Span span) {
    if (const auto* d = std::get_if<double>(&v)) return *d;
    fail(code::type_mismatch, uppercase(owner) + " expected input to be a number.", span, lowercase(owner));
  }

  AgentSet agentset(const Value& v, const std::string& owner, Span span) {
    if (const auto* s = std::get_if<AgentSet>(&v)) return *s;
    fail(code::type_mismatch, uppercase(owner) + " expected input to be an agent or agentset.", span, lowercase(owner));
  }

  double uniform() { return world_.rng.next_double(); }

  void run_block_for(const AgentSet& set, const Block& block) {
    for (auto id : set.members) {
      Agent agent{set.kind, id};
      if (!alive(agent)) continue;
      run_statements(block.statements, agent);
    }
  }

  void set_variable(const std::string& name, const Value& value, const Agent& agent, Span span) {
    const auto& spec = spec_for(name, agent.context, span);
    const double v = number(value, "set", span);
    if (spec.name == "pcolor") {
      world_.patches[patch_of(agent)] = wrap_color(v);
      return;
    }
    auto& t = turtle(agent);
    if (spec.name == "color") {
      t.color = wrap_color(v);
    } else if (spec.name == "heading") {
      t.heading = normalize_heading(v);
    } else if (spec.name == "xcor") {
      t.xcor = world_.wrap_x(v);
    } else if (spec.name == "ycor") {
      t.ycor = world_.wrap_y(v);
    } else {
      fail(code::expected_variable, uppercase(name) + " can't be set.", span, spec.name);
    }
  }

  void run_statement(const Statement& stmt, const Agent& agent) {
    const auto& spec = spec_for(stmt.name, agent.context, stmt.span);
    const auto& name = spec.name;

    if (name == "ask") {
      auto set = agentset(eval(stmt.args.at(0), agent), name, stmt.args[0].span);
      run_block_for(set, std::get<Block>(stmt.args.at(1).node));
    } else if (name == "create-turtles") {
      const double n = number(eval(stmt.args.at(0), agent), name, stmt.args[0].span);
      AgentSet created{AgentContext::turtle, {}};
      const auto count = n > 0 ? static_cast<std::int64_t>(std::floor(n)) : 0;
      for (std::int64_t i = 0; i < count; ++i) {
        Turtle t;
        t.id = world_.next_turtle_id++;
        t.color = kBaseColors[static_cast<std::size_t>(uniform() * 14.0)];
        t.heading = std::floor(uniform() * 360.0);
        world_.turtles.emplace(t.id, t);
        created.members.push_back(t.id);
      }
      if (stmt.args.size() > 1) run_block_for(created, std::get<Block>(stmt.args[1].node));
    } else if (name == "fd") {
      const double d = number(eval(stmt.args.at(0), agent), name, stmt.args[0].span);
      auto& t = turtle(agent);
      const double rad = t.heading * std::numbers::pi / 180.0;
      t.xcor = world_.wrap_x(t.xcor + d * std::sin(rad));
      t.ycor = world_.wrap_y(t.ycor + d * std::cos(rad));
    } else if (name == "right" || name == "left") {
      double d = number(eval(stmt.args.at(0), agent), name, stmt.args[0].span);
      if (name == "left") d = -d;
      auto& t = turtle(agent);
      t.heading = normalize_heading(t.heading + d);
    } else if (name == "set") {
      const auto& target = std::get<Identifier>(stmt.args.at(0).node);
      set_variable(target.name, eval(stmt.args.at(1), agent), agent, stmt.args[0].span);
    } else if (name == "setxy") {
      const double x = number(eval(stmt.args.at(0), agent), name, stmt.args[0].span);
      const double y = number(eval(stmt.args.at(1), agent), name, stmt.args[1].span);
      auto& t = turtle(agent);
      t.xcor = world_.wrap_x(x);
      t.ycor = world_.wrap_y(y);
    } else if (name == "print") {
      auto text = render(eval(stmt.args.at(0), agent));
      world_.output.push_back(text);
      lines.push_back(std::move(text));
    } else if (name == "die") {
      world_.turtles.erase(agent.id);
    } else if (name == "clear-all") {
      world_.turtles.clear();
      std::fill(world_.patches.begin(), world_.patches.end(), 0.0);
    } else {
      fail(code::unsupported_primitive, uppercase(name) + " can't be run.", stmt.span, name);
    }
  }

  static std::string render(const Value& v) {
    return std::visit(
        [](const auto& x) -> std::string {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, double>) {
            return format_number(x);
          } else if constexpr (std::is_same_v<T, std::string>) {
            return x;
          } else if constexpr (std::is_same_v<T, bool>) {
            return x ? "true" : "false";
          } else {
            const bool turtles = x.kind == AgentContext::turtle;
            return "(agentset, " + std::to_string(x.members.size()) + (turtles ? " turtles)" : " patches)");
          }
        },
        v);
  }

  AgentSet all_turtles() const {
    AgentSet s{AgentContext::turtle, {}};
    for (const auto& [id, t] : world_.turtles) s.members.push_back(id);
    return s;
  }

  AgentSet all_patches() const {
    AgentSet s{AgentContext::patch, {}};
    for (std::size_t i = 0; i < world_.patches.size(); ++i) s.members.push_back(static_cast<std::int64_t>(i));
    return s;
  }

  AgentSet neighbors(const Agent& agent) {
    const auto here = patch_of(agent);
    const int px = world_.patch_x(here);
    const int py = world_.patch_y(here);
    AgentSet s{AgentContext::patch, {}};
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0) continue;
        const auto idx = static_cast<std::int64_t>(world_.patch_at(px + dx, py + dy));
        if (idx != static_cast<std::int64_t>(here)) s.members.push_back(idx);
      }
    }
    std::sort(s.members.begin(), s.members.end());
    s.members.erase(std::unique(s.members.begin(), s.members.end()), s.members.end());
    return s;
  }

  Value reporter(const std::string& raw_name, const std::vector<Expr>& args, const Agent& agent, Span span) {
    const auto& spec = spec_for(raw_name, agent.context, span);
    const auto& name = spec.name;
    auto num_arg = [&](std::size_t i) { return number(eval(args.at(i), agent), name, args[i].span); };

    if (name == "turtles") return all_turtles();
    if (name == "patches") return all_patches();
    if (name == "neighbors") return neighbors(agent);
    if (name == "pcolor") return world_.patches[patch_of(agent)];
    if (name == "color") return turtle(agent).color;
    if (name == "heading") return turtle(agent).heading;
    if (name == "xcor") return turtle(agent).xcor;
    if (name == "ycor") return turtle(agent).ycor;
    if (name == "who") return static_cast<double>(turtle(agent).id);
    if (name == "random-xcor") return world_.bounds.min_pxcor - 0.5 + uniform() * world_.bounds.width();
    if (name == "random-ycor") return world_.bounds.min_pycor - 0.5 + uniform() * world_.bounds.height();
    if (name == "random") {
      const double n = std::trunc(num_arg(0));
      if (n < 0) {
        fail(code::invalid_argument, "RANDOM expected a non-negative number, but got " + format_number(n) + ".", span,
             name);
      }
      if (n == 0) return 0.0;
      return std::floor(uniform() * n);
    }
    if (name == "one-of") {
      auto set = agentset(eval(args.at(0), agent), name, args[0].span);
      if (set.members.empty()) return set;
      const auto pick = set.members[static_cast<std::size_t>(uniform() * static_cast<double>(set.members.size()))];
      return AgentSet{set.kind, {pick}};
    }
    if (name == "count") {
      return static_cast<double>(agentset(eval(args.at(0), agent), name, args[0].span).members.size());
    }
    if (name == "scale-color") {
      const double base = std::floor(wrap_color(num_arg(0)) / 10.0) * 10.0;
      const double v = num_arg(1);
      const double lo = num_arg(2);
      const double hi = num_arg(3);
      double frac = 0.5;
      if (lo < hi) {
        frac = (v - lo) / (hi - lo);
      } else if (lo > hi) {
        frac = 1.0 - (v - hi) / (lo - hi);
      }
      frac = std::clamp(frac, 0.0, 1.0);
      return base + std::min(frac * 10.0, 9.9999);
    }
    fail(code::unsupported_primitive, uppercase(name) + " can't be run.", span, name);
  }

  Value eval(const Expr& expr, const Agent& agent) {
    return std::visit(
        [&](const auto& node) -> Value {
          using T = std::decay_t<decltype(node)>;
          if constexpr (std::is_same_v<T, NumberLit>) {
            return node.value;
          } else if constexpr (std::is_same_v<T, StringLit>) {
            return node.value;
          } else if constexpr (std::is_same_v<T, ColorName>) {
            return node.value;
          } else if constexpr (std::is_same_v<T, Identifier>) {
            return reporter(node.name, {}, agent, expr.span);
          } else if constexpr (std::is_same_v<T, ReporterCall>) {
            return reporter(node.name, node.args, agent, expr.span);
          } else if constexpr (std::is_same_v<T, Paren>) {
            return eval(*node.inner, agent);
          } else if constexpr (std::is_same_v<T, Binary>) {
            return binary(node, agent, expr.span);
          } else if constexpr (std::is_same_v<T, Block>) {
            fail(code::unexpected_block, "A block of commands is not allowed here.", expr.span);
          } else {
            fail(code::unknown_primitive, "This program has unresolved errors.", expr.span);
          }
        },
        expr.node);
  }

  Value binary(const Binary& node, const Agent& agent, Span span) {
    const Value lhs = eval(*node.lhs, agent);
    const Value rhs = eval(*node.rhs, agent);
    const auto& op = node.op;
    if (op == "=" || op == "!=") {
      bool equal = false;
      if (lhs.index() == rhs.index()) {
        if (const auto* a = std::get_if<AgentSet>(&lhs)) {
          const auto& b = std::get<AgentSet>(rhs);
          equal = a->kind == b.kind && a->members == b.members;
        } else if (const auto* d = std::get_if<double>(&lhs)) {
          equal = *d == std::get<double>(rhs);
        } else if (const auto* s = std::get_if<std::string>(&lhs)) {
          equal = *s == std::get<std::string>(rhs);
        } else {
          equal = std::get<bool>(lhs) == std::get<bool>(rhs);
        }
      }
      return op == "=" ? equal : !equal;
    }
    const double a = number(lhs, op, node.lhs->span);
    const double b = number(rhs, op, node.rhs->span);
    if (op == "+") return a + b;
    if (op == "-") return a - b;
    if (op == "*") return a * b;
    if (op == "/") {
      if (b == 0) fail(code::division_by_zero, "Division by zero.", span, "/");
      return a / b;
    }
    if (op == "<") return a < b;
    if (op == ">") return a > b;
    if (op == "<=") return a <= b;
    return a >= b;
  }

  World& world_;
  const PrimitiveRegistry& registry_;
};

}  // namespace

ExecOutcome execute(const Ast& ast, World& world, const PrimitiveRegistry& registry) {
  Interpreter interp(world, registry);
  ExecOutcome out;
  try {
    interp.run(ast);
  } catch (const RuntimeError& e) {
    out.error = e.diagnostic;
  }
  out.output_lines = std::move(interp.lines);
  return out;
}

ViewModel snapshot(const World& world) {
  ViewModel v;
  v.bounds = world.bounds;
  v.patches = world.patches;
  for (const auto& [id, t] : world.turtles) v.turtles.push_back(TurtleView{t.id, t.xcor, t.ycor, t.heading, t.color});
  return v;
}

nlohmann::ordered_json ViewModel::to_json() const {
  nlohmann::ordered_json j;
  j["min_pxcor"] = bounds.min_pxcor;
  j["max_pxcor"] = bounds.max_pxcor;
  j["min_pycor"] = bounds.min_pycor;
  j["max_pycor"] = bounds.max_pycor;
  j["patches"] = patches;
  auto list = nlohmann::ordered_json::array();
  for (const auto& t : turtles) {
    nlohmann::ordered_json tj;
    tj["id"] = t.id;
    tj["x"] = t.x;
    tj["y"] = t.y;
    tj["heading"] = t.heading;
    tj["color"] = t.color;
    list.push_back(std::move(tj));
  }
  j["turtles"] = std::move(list);
  return j;
}

ViewModel ViewModel::from_json(const nlohmann::json& j) {
  ViewModel v;
  v.bounds = {j.at("min_pxcor").get<int>(), j.at("max_pxcor").get<int>(), j.at("min_pycor").get<int>(),
              j.at("max_pycor").get<int>()};
  v.patches = j.at("patches").get<std::vector<double>>();
  for (const auto& tj : j.at("turtles")) {
    v.turtles.push_back(TurtleView{tj.at("id").get<std::int64_t>(), tj.at("x").get<double>(), tj.at("y").get<double>(),
                                   tj.at("heading").get<double>(), tj.at("color").get<double>()});
  }
  return v;
}

}  // namespace turtletalk
