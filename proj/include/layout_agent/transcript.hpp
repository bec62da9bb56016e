#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "layout_agent/action.hpp"
#include "layout_agent/scene.hpp"

namespace layout_agent {

enum class Termination { finished, max_steps, unrecoverable_parse, backend_failure, cancelled };

std::string_view to_string(Termination t);
std::optional<Termination> termination_from_string(std::string_view s);

/// One agent step: prompt -> raw output -> parse -> apply.
struct StepRecord {
  int index = 0;
  std::string bundle_hash;
  std::string raw_output;
  /// The action as the model emitted it (relative offsets stay relative).
  std::optional<Action> action;
  std::optional<ProtocolError> error;
  /// Absolute form actually applied.
  std::optional<Action> resolved;
  /// Absent when parsing failed.
  std::optional<StepOutcome> outcome;
  std::string scene_hash;
  std::vector<std::string> image_hashes;
  std::vector<std::string> warnings;
};

/// Append-only episode record.
struct Transcript {
  std::string episode_id;
  std::string preset;
  std::string instruction;
  std::string start_scene_hash;
  std::vector<StepRecord> steps;
  std::optional<Termination> termination;
  std::string termination_detail;

  /// Appends with the next contiguous index.
  StepRecord& append(StepRecord record);
};

std::string step_to_json(const StepRecord& step);
StepRecord step_from_json(std::string_view line);

/// Line-delimited JSON: a header line, one line per step, and a footer line once terminated.
std::string transcript_to_jsonl(const Transcript& transcript);
Transcript transcript_from_jsonl(std::string_view text);

}  // namespace layout_agent
