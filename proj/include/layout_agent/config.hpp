#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "layout_agent/action.hpp"

namespace layout_agent {

enum class StatusTextMode { full, cursor_only, off };

std::string_view to_string(StatusTextMode mode);

/// Ablation switches and runtime limits for one episode.
struct AgentConfig {
  std::string preset = "custom";
  bool include_history = true;
  bool include_status_image = true;
  StatusTextMode status_text_mode = StatusTextMode::full;
  bool cot = true;
  PositionMode position_mode = PositionMode::absolute;
  int max_steps = 20;
  int parse_retry_limit = 2;
  double temperature = 0.1;
  int image_width = 512;
  int image_height = 256;
  /// Top-down view scale.
  double pixels_per_unit = 16.0;
  bool strict_collision = false;

  /// Throws std::invalid_argument when a limit is out of range.
  void validate() const;
};

/// method1 (all channels) through method6 (relative positions). Accepts "method3", "3", or "m3".
std::optional<AgentConfig> preset_config(std::string_view name);
/// The six presets in order.
std::vector<AgentConfig> all_presets();
/// Row label used in reports, e.g. "Method 4 (w/o status text)".
std::string preset_label(std::string_view preset);

}  // namespace layout_agent
