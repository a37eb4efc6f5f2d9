#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace turtletalk {

struct SlotSpec {
  std::string key;
  std::string question;
  std::vector<std::string> chips;  // example answers; clicking one sends its text
  bool required = true;
};

struct SlotSchema {
  std::string intent;  // lowercase
  std::vector<SlotSpec> slots;

  friend bool operator==(const SlotSchema&, const SlotSchema&) = default;
};

inline bool operator==(const SlotSpec& a, const SlotSpec& b) {
  return a.key == b.key && a.question == b.question && a.chips == b.chips && a.required == b.required;
}

/// Filled answers in fill order, kept verbatim (misspellings included).
using SlotValues = std::vector<std::pair<std::string, std::string>>;

/// Built-in intent schemas plus a generic fallback, loaded from the
/// declarative intents file.
class IntentCatalog {
 public:
  static IntentCatalog from_json(std::string_view text);
  static const IntentCatalog& builtin();

  /// Case-insensitive; unknown intents get the fallback schema renamed to
  /// the requested intent.
  SlotSchema schema_for(std::string_view intent) const;
  const std::vector<SlotSchema>& schemas() const { return schemas_; }

 private:
  std::vector<SlotSchema> schemas_;
  SlotSchema fallback_;
};

}  // namespace turtletalk
