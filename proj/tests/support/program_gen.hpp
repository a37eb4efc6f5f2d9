#pragma once

// Test-only grammar fuzzer: emits syntactically valid source over the
// registry's supported primitives. Context legality is NOT guaranteed, so
// callers can filter through check_context.

#include <random>
#include <string>
#include <vector>

#include "turtletalk/primitives.hpp"

namespace turtletalk::testing {

class ProgramGenerator {
 public:
  ProgramGenerator(const PrimitiveRegistry& registry, std::uint64_t seed) : registry_(registry), rng_(seed) {
    for (const auto& [name, spec] : registry.primitives()) {
      if (!spec.supported) continue;
      if (spec.kind == PrimitiveKind::command) commands_.push_back(name);
      if (spec.settable) variables_.push_back(name);
    }
    for (const auto& [name, value] : registry.colors()) colors_.push_back(name);
  }

  std::string program() {
    std::string out;
    const int n = pick(1, 4);
    for (int i = 0; i < n; ++i) {
      if (chance(0.2)) out += "; note " + std::to_string(pick(0, 99)) + "\n";
      out += statement(0);
      out += chance(0.5) ? "\n" : " ";
    }
    if (chance(0.1)) out += "; done\n";
    return out;
  }

 private:
  int pick(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool chance(double p) { return std::bernoulli_distribution(p)(rng_); }
  template <class T>
  const T& one_of(const std::vector<T>& v) {
    return v[static_cast<std::size_t>(pick(0, static_cast<int>(v.size()) - 1))];
  }

  std::string statement(int depth) {
    std::string name = one_of(commands_);
    // Keep nesting shallow so fuzzed programs stay fast to run.
    while (depth >= 2 && (name == "ask" || name == "create-turtles")) name = one_of(commands_);
    const auto* spec = registry_.lookup(name);
    std::string s = chance(0.1) ? uppercase(name) : name;
    for (const auto& param : spec->params) {
      if (param.optional && chance(0.5)) continue;
      s += " ";
      switch (param.type) {
        case SemanticType::block: s += block(depth + 1); break;
        case SemanticType::agentset: s += agentset(); break;
        case SemanticType::variable_name: s += one_of(variables_); break;
        case SemanticType::value: s += chance(0.2) ? "\"text " + std::to_string(pick(0, 9)) + "\"" : number(2); break;
        default:
          s += name == "create-turtles" ? std::to_string(pick(0, 4)) : number(2);
          break;
      }
    }
    return s;
  }

  std::string block(int depth) {
    const int n = pick(0, 3);
    if (n == 0) return "[]";
    std::string s = "[";
    for (int i = 0; i < n; ++i) {
      if (chance(0.15)) s += "\n; step " + std::to_string(i) + "\n";
      s += " " + statement(depth);
      if (chance(0.3)) s += "\n";
    }
    if (chance(0.1)) s += "\n; end of block\n";
    return s + " ]";
  }

  std::string agentset() {
    switch (pick(0, 4)) {
      case 0: return "turtles";
      case 1: return "patches";
      case 2: return "one-of turtles";
      case 3: return "one-of patches";
      default: return "neighbors";
    }
  }

  std::string number(int budget) {
    const int choice = budget <= 0 ? pick(0, 2) : pick(0, 10);
    switch (choice) {
      case 0: return std::to_string(pick(0, 20));
      case 1: return std::to_string(pick(-9, 9)) + "." + std::to_string(pick(0, 9)) + "5";
      case 2: return one_of(colors_);
      case 3: return "random " + std::to_string(pick(1, 10));
      case 4: return chance(0.5) ? "random-xcor" : "random-ycor";
      case 5: {
        static const std::vector<std::string> vars = {"color", "heading", "xcor", "ycor", "who", "pcolor"};
        return one_of(vars);
      }
      case 6: return "(" + number(budget - 1) + " + " + number(budget - 1) + ")";
      case 7: {
        static const std::vector<std::string> ops = {"+", "-", "*", "/"};
        return number(0) + " " + one_of(ops) + " " + number(budget - 1);
      }
      case 8: return "count " + agentset();
      case 9: return "scale-color " + one_of(colors_) + " " + number(0) + " 0 10";
      default: return "random (" + number(budget - 1) + ")";
    }
  }

  const PrimitiveRegistry& registry_;
  std::mt19937_64 rng_;
  std::vector<std::string> commands_;
  std::vector<std::string> variables_;
  std::vector<std::string> colors_;
};

}  // namespace turtletalk::testing
