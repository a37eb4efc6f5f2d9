#include "turtletalk/slots.hpp"

#include <stdexcept>

#include <nlohmann/json.hpp>

#include "embedded_data.hpp"
#include "turtletalk/ast.hpp"

namespace turtletalk {

namespace {

std::vector<SlotSpec> read_slots(const nlohmann::json& arr, const std::string& owner) {
  std::vector<SlotSpec> slots;
  bool any_required = false;
  for (const auto& s : arr) {
    SlotSpec spec;
    spec.key = s.at("key").get<std::string>();
    spec.question = s.at("question").get<std::string>();
    spec.chips = s.at("chips").get<std::vector<std::string>>();
    spec.required = s.value("required", true);
    if (spec.chips.empty()) throw std::invalid_argument("slot '" + spec.key + "' of " + owner + " has no chips");
    any_required = any_required || spec.required;
    slots.push_back(std::move(spec));
  }
  if (!any_required) throw std::invalid_argument(owner + " needs at least one required slot");
  return slots;
}

}  // namespace

IntentCatalog IntentCatalog::from_json(std::string_view text) {
  const auto j = nlohmann::json::parse(text);
  IntentCatalog catalog;
  for (const auto& i : j.at("intents")) {
    SlotSchema schema;
    schema.intent = lowercase(i.at("name").get<std::string>());
    schema.slots = read_slots(i.at("slots"), schema.intent);
    catalog.schemas_.push_back(std::move(schema));
  }
  catalog.fallback_.slots = read_slots(j.at("fallback").at("slots"), "fallback");
  return catalog;
}

const IntentCatalog& IntentCatalog::builtin() {
  static const IntentCatalog catalog = from_json(embedded::intents_json);
  return catalog;
}

SlotSchema IntentCatalog::schema_for(std::string_view intent) const {
  const auto key = lowercase(intent);
  for (const auto& s : schemas_) {
    if (s.intent == key) return s;
  }
  SlotSchema generic = fallback_;
  generic.intent = key;
  return generic;
}

}  // namespace turtletalk
