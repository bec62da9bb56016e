#include "layout_agent/agent.hpp"

#include <fstream>
#include <stdexcept>

namespace layout_agent {

namespace {

class TranscriptWriter {
 public:
  explicit TranscriptWriter(const std::optional<std::filesystem::path>& dir) : dir_(dir) {
    if (dir_) std::filesystem::create_directories(*dir_);
  }

  void write_views(int step, const std::optional<RenderedViews>& views) const {
    if (!dir_ || !views) return;
    write_png(views->overview, *dir_ / ("step" + std::to_string(step) + "_overview.png"));
    write_png(views->topdown, *dir_ / ("step" + std::to_string(step) + "_topdown.png"));
  }

  // Rewritten whole each step so the file is always a complete, parseable prefix.
  void flush(const Transcript& transcript) const {
    if (!dir_) return;
    auto path = *dir_ / "transcript.jsonl";
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << transcript_to_jsonl(transcript);
    if (!out) throw std::runtime_error("cannot write " + path.string());
  }

  void write_final_scene(const Scene& scene) const {
    if (!dir_) return;
    std::ofstream out(*dir_ / "final_scene.json", std::ios::binary | std::ios::trunc);
    out << serialize_scene(scene);
  }

 private:
  std::optional<std::filesystem::path> dir_;
};

}  // namespace

EpisodeResult run_episode(const AgentConfig& config, std::string_view instruction,
                          const Scene& initial, Backend& backend, const EpisodeOptions& options) {
  config.validate();
  if (options.factory == nullptr) throw std::invalid_argument("run_episode: factory is required");
  const PromptTemplates& templates =
      options.templates != nullptr ? *options.templates : PromptTemplates::builtin();
  const ApplyOptions apply_options{config.strict_collision};

  Scene scene = initial;
  Transcript transcript;
  transcript.episode_id = options.episode_id;
  transcript.preset = config.preset;
  transcript.instruction = std::string(instruction);
  transcript.start_scene_hash = scene_hash(scene);
  TranscriptWriter writer(options.output_dir);

  std::optional<Termination> termination;
  int consecutive_parse_failures = 0;

  for (int step = 0; step < config.max_steps && !termination; ++step) {
    if (options.cancel != nullptr && options.cancel->load()) {
      termination = Termination::cancelled;
      transcript.termination_detail = "cancelled";
      break;
    }

    std::optional<RenderedViews> views;
    if (config.include_status_image) {
      views = options.renderer ? options.renderer(scene, config) : render_views(scene, config);
    }
    PromptBundle bundle = build_prompt(config, instruction, transcript, scene, views, templates);

    StepRecord record;
    record.bundle_hash = bundle.hash();
    if (views) record.image_hashes = {views->overview.content_hash(), views->topdown.content_hash()};

    try {
      record.raw_output = backend.generate(bundle, GenerationParams{config.temperature, step});
    } catch (const std::exception& e) {
      termination = Termination::backend_failure;
      transcript.termination_detail = e.what();
      break;
    }

    ParseResult parsed = parse_action(record.raw_output, config.cot);
    if (!parsed) {
      record.error = parsed.error();
      ++consecutive_parse_failures;
      if (consecutive_parse_failures > config.parse_retry_limit) {
        termination = Termination::unrecoverable_parse;
        transcript.termination_detail = parsed.error().message;
      }
    } else {
      consecutive_parse_failures = 0;
      record.action = parsed.action();
      try {
        record.resolved = resolve_position(parsed.action(), scene.cursor(), config.position_mode);
        record.outcome = apply_action(scene, *record.resolved, *options.factory, apply_options,
                                      &record.warnings);
      } catch (const std::invalid_argument& e) {
        record.outcome = StepOutcome{StepStatus::rejected, e.what()};
      }
      if (record.outcome->status == StepStatus::finished) {
        termination = Termination::finished;
        transcript.termination_detail = record.outcome->detail;
      }
    }
    record.scene_hash = scene_hash(scene);

    const StepRecord& stored = transcript.append(std::move(record));
    writer.write_views(stored.index, views);
    if (termination) transcript.termination = termination;
    writer.flush(transcript);
    if (options.on_step) options.on_step(StepEvent{stored, scene, views});
  }

  if (!termination) {
    termination = Termination::max_steps;
    transcript.termination_detail = "step cap of " + std::to_string(config.max_steps) + " reached";
  }
  transcript.termination = termination;
  writer.flush(transcript);
  writer.write_final_scene(scene);
  return EpisodeResult{std::move(scene), std::move(transcript), *termination};
}

EpisodeResult continue_episode(const EpisodeResult& prior, std::string_view new_instruction,
                               const AgentConfig& config, Backend& backend,
                               const EpisodeOptions& options) {
  return run_episode(config, new_instruction, prior.final_scene, backend, options);
}

}  // namespace layout_agent
