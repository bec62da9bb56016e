#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "layout_agent/config.hpp"
#include "layout_agent/image.hpp"
#include "layout_agent/renderer.hpp"
#include "layout_agent/scene.hpp"
#include "layout_agent/transcript.hpp"

namespace layout_agent {

/// Which input channel a user part carries.
enum class Channel { instruction, history, status_text, status_image };

std::string_view to_string(Channel channel);

struct PromptPart {
  Channel channel;
  /// Text content; empty for image parts.
  std::string text;
  /// Set for image parts only.
  std::shared_ptr<const Image> image;
  std::string image_hash;
  /// "overview" or "topdown" for image parts.
  std::string view;

  bool is_image() const { return image != nullptr; }
};

/// Everything sent to the model for one step. The common prompt goes in `system_text`; user parts
/// follow in the fixed order instruction, history, status text, status images.
struct PromptBundle {
  std::string system_text;
  std::vector<PromptPart> user_parts;

  /// SHA-256 over the system text, each part's channel and text, and image content hashes.
  std::string hash() const;
  std::vector<const PromptPart*> parts(Channel channel) const;
};

/// Prompt templates with `{{name}}` placeholders.
class PromptTemplates {
 public:
  /// Templates compiled into the library from prompts/.
  static const PromptTemplates& builtin();
  /// Every `*.txt` in `dir`, keyed by file stem.
  static PromptTemplates load(const std::filesystem::path& dir);

  const std::string& get(std::string_view name) const;
  const std::string& version() const { return version_; }

 private:
  std::map<std::string, std::string, std::less<>> templates_;
  std::string version_;
};

/// Replaces each `{{name}}` with `values[name]`. Throws std::invalid_argument on an unknown or
/// unterminated placeholder.
std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& values);

/// The common prompt for a configuration; it varies only with the CoT and position-mode flags.
std::string common_prompt(const AgentConfig& config,
                          const PromptTemplates& templates = PromptTemplates::builtin());

/// Prior actions as JSON lines in execution order. Rejected steps are followed by
/// "REJECTED: <detail>" and unparseable outputs appear as "INVALID OUTPUT: <message>".
std::string render_history(const Transcript& history);

inline constexpr std::string_view kEmptyHistoryMarker = "(no actions yet)";

/// Assembles the bundle. `views` must be present exactly when config.include_status_image.
PromptBundle build_prompt(const AgentConfig& config, std::string_view instruction,
                          const Transcript& history, const Scene& scene,
                          const std::optional<RenderedViews>& views,
                          const PromptTemplates& templates = PromptTemplates::builtin());

}  // namespace layout_agent
