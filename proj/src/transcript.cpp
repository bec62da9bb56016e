#include "layout_agent/transcript.hpp"

#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace layout_agent {

using nlohmann::json;

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::finished: return "finished";
    case Termination::max_steps: return "max_steps";
    case Termination::unrecoverable_parse: return "unrecoverable_parse";
    case Termination::backend_failure: return "backend_failure";
    case Termination::cancelled: return "cancelled";
  }
  return "unknown";
}

std::optional<Termination> termination_from_string(std::string_view s) {
  for (auto t : {Termination::finished, Termination::max_steps, Termination::unrecoverable_parse,
                 Termination::backend_failure, Termination::cancelled}) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

StepRecord& Transcript::append(StepRecord record) {
  record.index = static_cast<int>(steps.size());
  steps.push_back(std::move(record));
  return steps.back();
}

namespace {

std::optional<ProtocolErrorKind> error_kind_from_string(std::string_view s) {
  for (auto k : {ProtocolErrorKind::no_json_found, ProtocolErrorKind::bad_function_name,
                 ProtocolErrorKind::missing_parameter, ProtocolErrorKind::bad_parameter_type,
                 ProtocolErrorKind::thought_required_missing,
                 ProtocolErrorKind::thought_forbidden_present}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

std::optional<StepStatus> status_from_string(std::string_view s) {
  for (auto st : {StepStatus::applied, StepStatus::rejected, StepStatus::finished}) {
    if (to_string(st) == s) return st;
  }
  return std::nullopt;
}

// Actions are stored as their wire JSON and re-parsed on load; thought presence decides the
// parse mode so actions without a thought round-trip too.
Action action_from_json(const json& j) {
  ParseResult r = parse_action(j.dump(), j.contains("thought"));
  if (!r) throw std::runtime_error("transcript: bad action: " + r.error().message);
  return r.action();
}

json step_json(const StepRecord& s) {
  json j;
  j["type"] = "step";
  j["step"] = s.index;
  j["bundle_hash"] = s.bundle_hash;
  j["raw_output"] = s.raw_output;
  j["action"] = s.action ? json::parse(action_to_json(*s.action)) : json(nullptr);
  j["resolved"] = s.resolved ? json::parse(action_to_json(*s.resolved)) : json(nullptr);
  j["error"] = s.error ? json{{"kind", to_string(s.error->kind)}, {"message", s.error->message}}
                       : json(nullptr);
  j["outcome"] = s.outcome ? json{{"status", to_string(s.outcome->status)},
                                  {"detail", s.outcome->detail}}
                           : json(nullptr);
  j["scene_hash"] = s.scene_hash;
  j["image_hashes"] = s.image_hashes;
  j["warnings"] = s.warnings;
  return j;
}

StepRecord step_from(const json& j) {
  StepRecord s;
  s.index = j.at("step").get<int>();
  s.bundle_hash = j.value("bundle_hash", "");
  s.raw_output = j.value("raw_output", "");
  if (j.contains("action") && !j["action"].is_null()) s.action = action_from_json(j["action"]);
  if (j.contains("resolved") && !j["resolved"].is_null()) {
    s.resolved = action_from_json(j["resolved"]);
  }
  if (j.contains("error") && !j["error"].is_null()) {
    auto kind = error_kind_from_string(j["error"].at("kind").get<std::string>());
    if (!kind) throw std::runtime_error("transcript: unknown error kind");
    s.error = ProtocolError{*kind, j["error"].at("message").get<std::string>()};
  }
  if (j.contains("outcome") && !j["outcome"].is_null()) {
    auto status = status_from_string(j["outcome"].at("status").get<std::string>());
    if (!status) throw std::runtime_error("transcript: unknown outcome status");
    s.outcome = StepOutcome{*status, j["outcome"].at("detail").get<std::string>()};
  }
  s.scene_hash = j.value("scene_hash", "");
  s.image_hashes = j.value("image_hashes", std::vector<std::string>{});
  s.warnings = j.value("warnings", std::vector<std::string>{});
  return s;
}

}  // namespace

std::string step_to_json(const StepRecord& step) {
  return step_json(step).dump(-1, ' ', false, json::error_handler_t::replace);
}

StepRecord step_from_json(std::string_view line) { return step_from(json::parse(line)); }

std::string transcript_to_jsonl(const Transcript& t) {
  std::string out;
  json header{{"type", "episode"},
              {"episode_id", t.episode_id},
              {"preset", t.preset},
              {"instruction", t.instruction},
              {"start_scene_hash", t.start_scene_hash}};
  out += header.dump(-1, ' ', false, json::error_handler_t::replace) + "\n";
  for (const auto& s : t.steps) out += step_to_json(s) + "\n";
  if (t.termination) {
    json footer{{"type", "end"},
                {"termination", to_string(*t.termination)},
                {"detail", t.termination_detail}};
    out += footer.dump(-1, ' ', false, json::error_handler_t::replace) + "\n";
  }
  return out;
}

Transcript transcript_from_jsonl(std::string_view text) {
  Transcript t;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    const std::string type = j.at("type").get<std::string>();
    if (type == "episode") {
      t.episode_id = j.value("episode_id", "");
      t.preset = j.value("preset", "");
      t.instruction = j.value("instruction", "");
      t.start_scene_hash = j.value("start_scene_hash", "");
    } else if (type == "step") {
      StepRecord s = step_from(j);
      if (s.index != static_cast<int>(t.steps.size())) {
        throw std::runtime_error("transcript: step indices not contiguous");
      }
      t.steps.push_back(std::move(s));
    } else if (type == "end") {
      t.termination = termination_from_string(j.at("termination").get<std::string>());
      t.termination_detail = j.value("detail", "");
    }
  }
  return t;
}

}  // namespace layout_agent
