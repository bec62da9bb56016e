#include "layout_agent/action.hpp"

#include <nlohmann/json.hpp>

namespace layout_agent {

using nlohmann::json;

std::string_view to_string(ProtocolErrorKind kind) {
  switch (kind) {
    case ProtocolErrorKind::no_json_found: return "no_json_found";
    case ProtocolErrorKind::bad_function_name: return "bad_function_name";
    case ProtocolErrorKind::missing_parameter: return "missing_parameter";
    case ProtocolErrorKind::bad_parameter_type: return "bad_parameter_type";
    case ProtocolErrorKind::thought_required_missing: return "thought_required_missing";
    case ProtocolErrorKind::thought_forbidden_present: return "thought_forbidden_present";
  }
  return "unknown";
}

std::string_view to_string(PositionMode mode) {
  return mode == PositionMode::absolute ? "absolute" : "relative";
}

std::string_view function_name(const Action& action) {
  struct Visitor {
    std::string_view operator()(const MoveCursor&) const { return "move_cursor"; }
    std::string_view operator()(const PlaceObject&) const { return "place_object"; }
    std::string_view operator()(const FinishAction&) const { return "finish_action"; }
  };
  return std::visit(Visitor{}, action.function);
}

namespace {

// Returns the first balanced {...} span that parses as a JSON object. String literals are
// tracked so braces inside them do not confuse the scan.
std::optional<json> extract_first_object(std::string_view raw) {
  for (std::size_t start = raw.find('{'); start != std::string_view::npos;
       start = raw.find('{', start + 1)) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < raw.size(); ++i) {
      char c = raw[i];
      if (in_string) {
        if (escaped) {
          escaped = false;
        } else if (c == '\\') {
          escaped = true;
        } else if (c == '"') {
          in_string = false;
        }
        continue;
      }
      if (c == '"') {
        in_string = true;
      } else if (c == '{') {
        ++depth;
      } else if (c == '}') {
        if (--depth == 0) {
          json parsed = json::parse(raw.substr(start, i - start + 1), nullptr, false);
          if (!parsed.is_discarded() && parsed.is_object()) return parsed;
          break;
        }
      }
    }
  }
  return std::nullopt;
}

ProtocolError error(ProtocolErrorKind kind, std::string message) {
  return ProtocolError{kind, std::move(message)};
}

std::optional<double> number_param(const json& params, const char* name) {
  auto it = params.find(name);
  if (it == params.end() || !it->is_number()) return std::nullopt;
  return it->get<double>();
}

}  // namespace

ParseResult parse_action(std::string_view raw, bool cot_enabled) {
  std::optional<json> doc;
  try {
    doc = extract_first_object(raw);
  } catch (const std::exception&) {
    doc.reset();
  }
  if (!doc) {
    return error(ProtocolErrorKind::no_json_found,
                 "no JSON object found in output; reply with a single JSON object containing "
                 "\"function\" and \"parameters\"");
  }

  Action action;
  auto thought = doc->find("thought");
  if (cot_enabled) {
    if (thought == doc->end()) {
      return error(ProtocolErrorKind::thought_required_missing,
                   "field \"thought\" is required and was missing");
    }
    if (!thought->is_string()) {
      return error(ProtocolErrorKind::bad_parameter_type, "field \"thought\" must be a string");
    }
    action.thought = thought->get<std::string>();
  }

  auto fn = doc->find("function");
  if (fn == doc->end()) {
    return error(ProtocolErrorKind::missing_parameter, "field \"function\" is missing");
  }
  if (!fn->is_string()) {
    return error(ProtocolErrorKind::bad_function_name, "field \"function\" must be a string");
  }
  const std::string name = fn->get<std::string>();
  if (name != "move_cursor" && name != "place_object" && name != "finish_action") {
    return error(ProtocolErrorKind::bad_function_name,
                 "field \"function\" has unknown value \"" + name +
                     "\"; must be one of move_cursor, place_object, finish_action");
  }

  auto params_it = doc->find("parameters");
  if (params_it == doc->end()) {
    return error(ProtocolErrorKind::missing_parameter, "field \"parameters\" is missing");
  }
  if (!params_it->is_object()) {
    return error(ProtocolErrorKind::bad_parameter_type, "field \"parameters\" must be an object");
  }
  const json& params = *params_it;

  auto require_present = [&](const char* key) -> std::optional<ProtocolError> {
    if (!params.contains(key)) {
      return error(ProtocolErrorKind::missing_parameter,
                   "parameter \"" + std::string(key) + "\" is missing for " + name);
    }
    return std::nullopt;
  };

  if (name == "move_cursor") {
    for (const char* key : {"x", "y"}) {
      if (auto e = require_present(key)) return *e;
    }
    auto x = number_param(params, "x");
    auto y = number_param(params, "y");
    if (!x) return error(ProtocolErrorKind::bad_parameter_type, "parameter \"x\" must be a number");
    if (!y) return error(ProtocolErrorKind::bad_parameter_type, "parameter \"y\" must be a number");
    if (!std::isfinite(*x) || !std::isfinite(*y)) {
      return error(ProtocolErrorKind::bad_parameter_type, "parameters \"x\" and \"y\" must be finite");
    }
    action.function = MoveCursor{Vec2{*x, *y}};
  } else if (name == "place_object") {
    if (auto e = require_present("object_name")) return *e;
    const json& obj = params["object_name"];
    if (!obj.is_string()) {
      return error(ProtocolErrorKind::bad_parameter_type, "parameter \"object_name\" must be a string");
    }
    std::string object_name = obj.get<std::string>();
    if (object_name.find_first_not_of(" \t\r\n") == std::string::npos) {
      return error(ProtocolErrorKind::bad_parameter_type, "parameter \"object_name\" must be non-empty");
    }
    action.function = PlaceObject{std::move(object_name)};
  } else {
    if (auto e = require_present("reason")) return *e;
    const json& reason = params["reason"];
    if (!reason.is_string()) {
      return error(ProtocolErrorKind::bad_parameter_type, "parameter \"reason\" must be a string");
    }
    action.function = FinishAction{reason.get<std::string>()};
  }
  return action;
}

Action resolve_position(const Action& action, Vec2 cursor, PositionMode mode) {
  if (mode == PositionMode::absolute) return action;
  const auto* move = std::get_if<MoveCursor>(&action.function);
  if (move == nullptr) return action;
  Action resolved = action;
  resolved.function = MoveCursor{cursor + move->target};
  return resolved;
}

std::string action_to_json(const Action& action) {
  // ordered_json keeps the wire order: thought, function, parameters.
  nlohmann::ordered_json out;
  if (action.thought) out["thought"] = *action.thought;
  out["function"] = function_name(action);
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
  if (const auto* m = std::get_if<MoveCursor>(&action.function)) {
    params["x"] = m->target.x();
    params["y"] = m->target.y();
  } else if (const auto* p = std::get_if<PlaceObject>(&action.function)) {
    params["object_name"] = p->object_name;
  } else if (const auto* f = std::get_if<FinishAction>(&action.function)) {
    params["reason"] = f->reason;
  }
  out["parameters"] = std::move(params);
  return out.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

}  // namespace layout_agent
