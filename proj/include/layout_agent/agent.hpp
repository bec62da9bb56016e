#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "layout_agent/backend.hpp"
#include "layout_agent/config.hpp"
#include "layout_agent/object_factory.hpp"
#include "layout_agent/prompt.hpp"
#include "layout_agent/renderer.hpp"
#include "layout_agent/scene.hpp"
#include "layout_agent/transcript.hpp"

namespace layout_agent {

struct EpisodeResult {
  Scene final_scene;
  Transcript transcript;
  Termination termination;
};

/// Snapshot handed to step observers after each step is recorded.
struct StepEvent {
  const StepRecord& step;
  const Scene& scene;
  /// Views rendered for this step's prompt, when the image channel is on.
  const std::optional<RenderedViews>& views;
};

struct EpisodeOptions {
  /// Required; supplies footprints for placed objects.
  ObjectFactory* factory = nullptr;
  /// Episode id recorded in the transcript.
  std::string episode_id = "episode";
  /// When set, writes transcript.jsonl and step<k>_<view>.png here as the episode runs.
  std::optional<std::filesystem::path> output_dir;
  /// Checked before each step; set it to stop the episode at the last consistent scene.
  const std::atomic<bool>* cancel = nullptr;
  std::function<void(const StepEvent&)> on_step;
  /// Replaceable for tests; defaults to render_views.
  std::function<RenderedViews(const Scene&, const AgentConfig&)> renderer;
  const PromptTemplates* templates = nullptr;
};

/// Runs prompt -> generate -> parse -> apply until finish_action, the step cap, retry
/// exhaustion, a backend failure, or cancellation. Every backend call consumes one step.
EpisodeResult run_episode(const AgentConfig& config, std::string_view instruction,
                          const Scene& initial, Backend& backend, const EpisodeOptions& options);

/// A fresh episode starting from `prior.final_scene` with a new instruction and empty history.
EpisodeResult continue_episode(const EpisodeResult& prior, std::string_view new_instruction,
                               const AgentConfig& config, Backend& backend,
                               const EpisodeOptions& options);

}  // namespace layout_agent
