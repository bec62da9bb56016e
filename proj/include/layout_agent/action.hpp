#pragma once

// Action protocol: the JSON text the model emits each step and its parsed form.
//
//   {"thought": "...", "function": "move_cursor",   "parameters": {"x": 4, "y": 7}}
//   {"thought": "...", "function": "place_object",  "parameters": {"object_name": "tree"}}
//   {"thought": "...", "function": "finish_action", "parameters": {"reason": "..."}}
//
// `thought` is required when chain-of-thought is enabled and ignored otherwise.

#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "layout_agent/geometry.hpp"

namespace layout_agent {

struct MoveCursor {
  Vec2 target;
  friend bool operator==(const MoveCursor&, const MoveCursor&) = default;
};

struct PlaceObject {
  std::string object_name;
  friend bool operator==(const PlaceObject&, const PlaceObject&) = default;
};

struct FinishAction {
  std::string reason;
  friend bool operator==(const FinishAction&, const FinishAction&) = default;
};

using ActionFunction = std::variant<MoveCursor, PlaceObject, FinishAction>;

struct Action {
  std::optional<std::string> thought;
  ActionFunction function;

  friend bool operator==(const Action&, const Action&) = default;
};

enum class PositionMode { absolute, relative };

enum class ProtocolErrorKind {
  no_json_found,
  bad_function_name,
  missing_parameter,
  bad_parameter_type,
  thought_required_missing,
  thought_forbidden_present,
};

struct ProtocolError {
  ProtocolErrorKind kind;
  std::string message;
};

std::string_view to_string(ProtocolErrorKind kind);
std::string_view to_string(PositionMode mode);
std::string_view function_name(const Action& action);

/// Either a parsed action or the reason it could not be parsed.
class ParseResult {
 public:
  ParseResult(Action action) : value_(std::move(action)) {}
  ParseResult(ProtocolError error) : value_(std::move(error)) {}

  bool ok() const { return std::holds_alternative<Action>(value_); }
  explicit operator bool() const { return ok(); }
  const Action& action() const { return std::get<Action>(value_); }
  const ProtocolError& error() const { return std::get<ProtocolError>(value_); }

 private:
  std::variant<Action, ProtocolError> value_;
};

/// Extracts the first JSON object from `raw` (prose and code fences tolerated) and validates it.
/// Never throws.
ParseResult parse_action(std::string_view raw, bool cot_enabled);

/// In relative mode a MoveCursor target is an offset from `cursor`; returns the absolute form.
Action resolve_position(const Action& action, Vec2 cursor, PositionMode mode);

/// Compact JSON text of the action in the wire schema (the same text used in action history).
std::string action_to_json(const Action& action);

}  // namespace layout_agent
