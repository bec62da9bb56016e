#include "layout_agent/config.hpp"

#include <stdexcept>

namespace layout_agent {

std::string_view to_string(StatusTextMode mode) {
  switch (mode) {
    case StatusTextMode::full: return "full";
    case StatusTextMode::cursor_only: return "cursor_only";
    case StatusTextMode::off: return "off";
  }
  return "unknown";
}

void AgentConfig::validate() const {
  if (max_steps < 1) throw std::invalid_argument("config: max_steps must be >= 1");
  if (parse_retry_limit < 0) throw std::invalid_argument("config: parse_retry_limit must be >= 0");
  if (image_width <= 0 || image_height <= 0) {
    throw std::invalid_argument("config: image dimensions must be > 0");
  }
  if (!(pixels_per_unit > 0.0)) throw std::invalid_argument("config: pixels_per_unit must be > 0");
  if (!(temperature >= 0.0)) throw std::invalid_argument("config: temperature must be >= 0");
}

std::optional<AgentConfig> preset_config(std::string_view name) {
  if (name.starts_with("method")) {
    name.remove_prefix(6);
  } else if (name.starts_with("m")) {
    name.remove_prefix(1);
  }
  if (name.size() != 1 || name[0] < '1' || name[0] > '6') return std::nullopt;

  AgentConfig c;
  c.preset = "method" + std::string(name);
  switch (name[0]) {
    case '1': break;
    case '2': c.include_history = false; break;
    case '3': c.include_status_image = false; break;
    case '4': c.status_text_mode = StatusTextMode::cursor_only; break;
    case '5': c.cot = false; break;
    case '6': c.position_mode = PositionMode::relative; break;
  }
  return c;
}

std::vector<AgentConfig> all_presets() {
  std::vector<AgentConfig> out;
  for (char n = '1'; n <= '6'; ++n) out.push_back(*preset_config(std::string(1, n)));
  return out;
}

std::string preset_label(std::string_view preset) {
  static constexpr std::string_view kLabels[] = {
      "Method 1 (all)",          "Method 2 (w/o history)",   "Method 3 (w/o status image)",
      "Method 4 (w/o status text)", "Method 5 (w/o CoT)",   "Method 6 (w/o absolute pos)",
  };
  if (preset.size() == 7 && preset.starts_with("method") && preset[6] >= '1' && preset[6] <= '6') {
    return std::string(kLabels[preset[6] - '1']);
  }
  return std::string(preset);
}

}  // namespace layout_agent
