#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "turtletalk/ast.hpp"
#include "turtletalk/pcg32.hpp"
#include "turtletalk/primitives.hpp"

namespace turtletalk {

struct WorldBounds {
  int min_pxcor = -16;
  int max_pxcor = 16;
  int min_pycor = -16;
  int max_pycor = 16;

  int width() const { return max_pxcor - min_pxcor + 1; }
  int height() const { return max_pycor - min_pycor + 1; }
  friend bool operator==(const WorldBounds&, const WorldBounds&) = default;
};

struct Turtle {
  std::int64_t id = 0;
  double xcor = 0;
  double ycor = 0;
  double heading = 0;  // degrees clockwise from north, [0, 360)
  double color = 0;    // [0, 140)

  friend bool operator==(const Turtle&, const Turtle&) = default;
};

/// Mutable simulation state. Patches are stored row-major starting from the
/// top row (max_pycor), x ascending within a row.
struct World {
  WorldBounds bounds;
  std::vector<double> patches;  // pcolor per patch
  std::map<std::int64_t, Turtle> turtles;
  std::int64_t next_turtle_id = 0;
  Pcg32 rng;
  std::vector<std::string> output;

  std::size_t patch_index(int pxcor, int pycor) const;
  /// Patch under a continuous point, after wrapping.
  std::size_t patch_at(double x, double y) const;
  int patch_x(std::size_t index) const;
  int patch_y(std::size_t index) const;
  double wrap_x(double x) const;
  double wrap_y(double y) const;

  friend bool operator==(const World&, const World&) = default;
};

/// Throws std::invalid_argument when min > max on either axis.
World new_world(const WorldBounds& bounds, std::uint64_t seed);

struct ExecOutcome {
  std::optional<Diagnostic> error;  // set on runtime error; world keeps prior mutations
  std::vector<std::string> output_lines;

  bool ok() const { return !error.has_value(); }
};

/// Runs a checked program in observer context.
ExecOutcome execute(const Ast& ast, World& world, const PrimitiveRegistry& registry);

struct TurtleView {
  std::int64_t id = 0;
  double x = 0;
  double y = 0;
  double heading = 0;
  double color = 0;
};

struct ViewModel {
  WorldBounds bounds;
  std::vector<double> patches;
  std::vector<TurtleView> turtles;

  nlohmann::ordered_json to_json() const;
  static ViewModel from_json(const nlohmann::json& j);
};

ViewModel snapshot(const World& world);

double normalize_heading(double heading);
double wrap_color(double color);

/// Base colors new turtles draw from: gray, red, orange, ... pink.
inline constexpr double kBaseColors[14] = {5, 15, 25, 35, 45, 55, 65, 75, 85, 95, 105, 115, 125, 135};

}  // namespace turtletalk
