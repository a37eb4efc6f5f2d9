#pragma once

#include <stdexcept>

#include <nlohmann/json.hpp>

#include "turtletalk/dialog.hpp"
#include "turtletalk/runtime.hpp"

namespace turtletalk {

/// Thrown for records that do not match the documented schema.
class WireError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using ordered_json = nlohmann::ordered_json;

ordered_json to_json(const Diagnostic& d);
Diagnostic diagnostic_from_json(const nlohmann::json& j);

ordered_json to_json(const CodeCandidate& c);
ordered_json to_json(const ChatTurn& t);
ordered_json to_json(const SlotSpec& s);
ordered_json to_json(const Features& f);
Features features_from_json(const nlohmann::json& j);
ordered_json to_json(const WorldBounds& b);
WorldBounds bounds_from_json(const nlohmann::json& j);

ordered_json to_json(const Event& e);
/// Accepts every Event record; throws WireError otherwise.
Event event_from_json(const nlohmann::json& j);

ordered_json to_json(const Action& a);

/// Diagnostic view of a dialog state, used to tell states apart in tests
/// and debugging output. Not meant to be parsed back.
ordered_json to_json(const DialogState& s);

}  // namespace turtletalk
