#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace turtletalk {

/// Half-open byte range [begin, end) into a source buffer.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool contains(const Span& other) const { return begin <= other.begin && other.end <= end; }
  Span merge(const Span& other) const {
    return {begin < other.begin ? begin : other.begin, end > other.end ? end : other.end};
  }
  friend bool operator==(const Span&, const Span&) = default;
};

enum class Severity { error, warning };

std::string_view to_string(Severity severity);

/// Stable diagnostic codes. Fixtures and clients match on these strings.
namespace code {
inline constexpr std::string_view unterminated_string = "unterminated-string";
inline constexpr std::string_view unknown_primitive = "unknown-primitive";
inline constexpr std::string_view unsupported_primitive = "unsupported-primitive";
inline constexpr std::string_view missing_argument = "missing-argument";
inline constexpr std::string_view unbalanced_block = "unbalanced-block";
inline constexpr std::string_view unexpected_block = "unexpected-block";
inline constexpr std::string_view expected_command = "expected-command";
inline constexpr std::string_view expected_variable = "expected-variable";
inline constexpr std::string_view context_error = "context-error";
inline constexpr std::string_view type_mismatch = "type-mismatch";
inline constexpr std::string_view division_by_zero = "division-by-zero";
inline constexpr std::string_view invalid_argument = "invalid-argument";
}  // namespace code

struct Diagnostic {
  Severity severity = Severity::error;
  std::string code;
  std::string message;
  Span span;
  std::vector<std::string> related;

  friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

std::size_t count_errors(const std::vector<Diagnostic>& diagnostics);

}  // namespace turtletalk
