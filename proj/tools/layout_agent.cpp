// layout-agent command line: run, eval, replay, render, serve.

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "layout_agent/agent.hpp"
#include "layout_agent/backend.hpp"
#include "layout_agent/eval.hpp"
#include "layout_agent/renderer.hpp"
#include "layout_agent/service.hpp"

namespace la = layout_agent;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitEpisodeFailed = 3;
constexpr int kExitError = 4;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BackendArgs {
  std::string kind = "scripted";
  std::vector<std::string> scripts;
  std::string script_dir;
  std::string cassette;
  std::string record;
};

void add_backend_flags(CLI::App* cmd, BackendArgs& args) {
  cmd->add_option("--backend", args.kind, "Model backend")
      ->check(CLI::IsMember({"scripted", "replay", "live"}));
  cmd->add_option("--script", args.scripts, "Scripted responses (JSONL); one file per episode");
  cmd->add_option("--script-dir", args.script_dir,
                  "Directory of task<id>.jsonl / task<id>.relative.jsonl scripts (eval)");
  cmd->add_option("--cassette", args.cassette, "Cassette to replay from");
  cmd->add_option("--record", args.record, "Record every exchange to this cassette");
}

std::unique_ptr<la::Backend> wrap_recording(std::unique_ptr<la::Backend> backend,
                                            const std::shared_ptr<la::Cassette>& recorder) {
  if (!recorder) return backend;
  return std::make_unique<la::RecordingBackend>(std::move(backend), recorder);
}

// Builds one backend per episode. `episode` indexes --script files for scripted runs; `task`
// selects a script from --script-dir when given.
class BackendSource {
 public:
  explicit BackendSource(const BackendArgs& args) : args_(args) {
    if (args.kind == "replay") {
      if (args.cassette.empty()) throw UsageError("--backend replay requires --cassette");
      if (!fs::exists(args.cassette)) throw UsageError("cassette not found: " + args.cassette);
      replay_ = std::make_shared<la::Cassette>(args.cassette);
    } else if (args.kind == "scripted") {
      if (args.scripts.empty() && args.script_dir.empty()) {
        throw UsageError("--backend scripted requires --script or --script-dir");
      }
    } else if (args.kind == "live") {
      live_ = la::LiveHttpOptions::from_environment();
    }
    if (!args.record.empty()) recorder_ = std::make_shared<la::Cassette>(args.record);
  }

  std::unique_ptr<la::Backend> make(std::size_t episode, const la::AgentConfig& config,
                                    std::optional<int> task_id) const {
    std::unique_ptr<la::Backend> backend;
    if (args_.kind == "replay") {
      backend = std::make_unique<la::ReplayBackend>(replay_);
    } else if (args_.kind == "live") {
      backend = std::make_unique<la::LiveHttpBackend>(*live_);
    } else {
      backend = std::make_unique<la::ScriptedBackend>(la::load_script(script_for(episode, config, task_id)));
    }
    return wrap_recording(std::move(backend), recorder_);
  }

 private:
  fs::path script_for(std::size_t episode, const la::AgentConfig& config,
                      std::optional<int> task_id) const {
    if (!args_.script_dir.empty() && task_id) {
      fs::path dir(args_.script_dir);
      std::string stem = "task" + std::to_string(*task_id);
      if (config.position_mode == la::PositionMode::relative &&
          fs::exists(dir / (stem + ".relative.jsonl"))) {
        return dir / (stem + ".relative.jsonl");
      }
      return dir / (stem + ".jsonl");
    }
    if (args_.scripts.empty()) throw UsageError("no --script given");
    return args_.scripts[std::min(episode, args_.scripts.size() - 1)];
  }

  BackendArgs args_;
  std::shared_ptr<la::Cassette> replay_;
  std::shared_ptr<la::Cassette> recorder_;
  std::optional<la::LiveHttpOptions> live_;
};

struct EpisodeArgs {
  std::string method = "1";
  std::string task_file;
  std::string instruction;
  std::string scene_file;
  std::string out = "out/run";
  std::string manifest;
  int max_steps = 0;
  bool strict_collision = false;
};

void add_episode_flags(CLI::App* cmd, EpisodeArgs& args) {
  cmd->add_option("-m,--method", args.method, "Ablation preset: 1-6 or method1..method6");
  cmd->add_option("--task-file", args.task_file, "Task JSON (instruction and fixture)");
  cmd->add_option("--instruction", args.instruction, "Instruction text (overrides the task's)");
  cmd->add_option("--scene", args.scene_file, "Initial scene file (overrides the task's)");
  cmd->add_option("--out", args.out, "Output directory");
  cmd->add_option("--manifest", args.manifest, "Asset cache manifest path");
  cmd->add_option("--max-steps", args.max_steps, "Override the step cap");
  cmd->add_flag("--strict-collision", args.strict_collision, "Reject overlapping placements");
}

la::AgentConfig config_for(const std::string& method, int max_steps, bool strict) {
  auto config = la::preset_config(method);
  if (!config) throw UsageError("unknown preset '" + method + "'");
  if (max_steps > 0) config->max_steps = max_steps;
  config->strict_collision = strict;
  return *config;
}

// LAYOUT_AGENT_MESH_ENDPOINT, when set, is a text-to-3D service tried before the procedural assets.
std::unique_ptr<la::ObjectFactory> make_factory(const std::string& manifest) {
  auto factory = manifest.empty() ? std::make_unique<la::ObjectFactory>()
                                  : std::make_unique<la::ObjectFactory>(fs::path(manifest));
  if (const char* url = std::getenv("LAYOUT_AGENT_MESH_ENDPOINT"); url && *url) {
    factory->attach_external_generator(std::make_shared<la::HttpMeshGenerator>(url));
  }
  return factory;
}

int run_single(const EpisodeArgs& args, const BackendArgs& backend_args) {
  la::AgentConfig config = config_for(args.method, args.max_steps, args.strict_collision);
  std::optional<la::EvalTask> task;
  if (!args.task_file.empty()) task = la::load_task(args.task_file);
  std::string instruction = !args.instruction.empty() ? args.instruction
                            : task                    ? task->instruction
                                                      : "";
  if (instruction.empty()) throw UsageError("need --task-file or --instruction");
  la::Scene scene = !args.scene_file.empty() ? la::load_scene_file(args.scene_file)
                    : task                   ? task->initial_scene
                                             : la::Scene{};

  BackendSource source(backend_args);
  auto backend = source.make(0, config, task ? std::optional<int>(task->id) : std::nullopt);
  auto factory = make_factory(args.manifest);
  la::EpisodeOptions options;
  options.factory = factory.get();
  options.episode_id = fs::path(args.out).filename().string();
  options.output_dir = fs::path(args.out);
  options.on_step = [](const la::StepEvent& ev) {
    std::cout << "step " << ev.step.index << ": ";
    if (ev.step.action) {
      std::cout << la::action_to_json(*ev.step.action);
      if (ev.step.outcome && ev.step.outcome->status == la::StepStatus::rejected) {
        std::cout << "  -> REJECTED: " << ev.step.outcome->detail;
      }
    } else if (ev.step.error) {
      std::cout << "invalid output (" << la::to_string(ev.step.error->kind) << ")";
    }
    std::cout << "\n";
  };
  la::EpisodeResult result = la::run_episode(config, instruction, scene, *backend, options);
  std::cout << "termination: " << la::to_string(result.termination) << "\n";
  if (task) {
    la::TaskScore score = la::score_task(*task, result.final_scene);
    std::cout << "score: " << score.value << "\n";
    for (const auto& r : score.results) {
      std::cout << "  [" << (r.satisfied ? "x" : " ") << "] " << r.predicate.describe() << "\n";
    }
  }
  std::cout << "output: " << args.out << "\n";
  return result.termination == la::Termination::finished ? kExitOk : kExitEpisodeFailed;
}

std::vector<la::AgentConfig> parse_methods(const std::string& spec) {
  std::vector<la::AgentConfig> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto dash = item.find('-');
    if (dash != std::string::npos && item.find_first_not_of("0123456789-") == std::string::npos) {
      int lo = std::stoi(item.substr(0, dash));
      int hi = std::stoi(item.substr(dash + 1));
      for (int m = lo; m <= hi; ++m) out.push_back(config_for(std::to_string(m), 0, false));
    } else {
      out.push_back(config_for(item, 0, false));
    }
  }
  if (out.empty()) throw UsageError("no methods selected");
  return out;
}

volatile std::sig_atomic_t g_stop = 0;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Agent-driven layout generation in a 2.5D virtual space"};
  app.require_subcommand(1);

  EpisodeArgs run_args;
  BackendArgs run_backend;
  auto* run = app.add_subcommand("run", "Run one episode");
  add_episode_flags(run, run_args);
  add_backend_flags(run, run_backend);

  EpisodeArgs replay_args;
  BackendArgs replay_backend;
  replay_backend.kind = "replay";
  auto* replay = app.add_subcommand("replay", "Re-run an episode from a recorded cassette");
  add_episode_flags(replay, replay_args);
  replay->add_option("--cassette", replay_backend.cassette, "Cassette file")->required();

  std::string methods = "1-6";
  std::string tasks_dir = "tasks";
  int trials = 3;
  std::string eval_out = "out/eval";
  std::string eval_manifest;
  unsigned workers = 1;
  BackendArgs eval_backend;
  auto* eval = app.add_subcommand("eval", "Run the method x task x trial matrix");
  eval->add_option("--methods", methods, "Presets, e.g. 1-6 or 1,4");
  eval->add_option("--tasks", tasks_dir, "Directory of task JSON files");
  eval->add_option("--trials", trials, "Episodes per (method, task)")->check(CLI::NonNegativeNumber);
  eval->add_option("--out", eval_out, "Output directory (report and transcripts)");
  eval->add_option("--manifest", eval_manifest, "Asset cache manifest path");
  eval->add_option("--workers", workers, "Parallel episodes");
  add_backend_flags(eval, eval_backend);

  std::string render_scene;
  std::string render_out = "out/render";
  int width = 512, height = 256;
  double scale = 16.0;
  auto* render = app.add_subcommand("render", "Render the two views of a scene file");
  render->add_option("--scene", render_scene, "Scene file")->required();
  render->add_option("--out", render_out, "Output directory");
  render->add_option("--width", width, "Image width");
  render->add_option("--height", height, "Image height");
  render->add_option("--scale", scale, "Top-down pixels per grid unit");

  std::string host = "127.0.0.1";
  int port = 8080;
  std::string fixtures_dir = "fixtures";
  std::string data_dir = "out/service";
  std::string serve_method = "1";
  BackendArgs serve_backend;
  auto* serve = app.add_subcommand("serve", "Serve the HTTP API");
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port");
  serve->add_option("--fixtures", fixtures_dir, "Scene fixtures directory");
  serve->add_option("--data-dir", data_dir, "Where transcripts and views are written");
  serve->add_option("-m,--method", serve_method, "Default preset");
  add_backend_flags(serve, serve_backend);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*run) return run_single(run_args, run_backend);
    if (*replay) return run_single(replay_args, replay_backend);

    if (*eval) {
      auto configs = parse_methods(methods);
      auto tasks = la::load_tasks(tasks_dir);
      BackendSource source(eval_backend);
      auto factory = make_factory(eval_manifest);
      la::MatrixOptions options{factory.get(), fs::path(eval_out), workers};
      la::Report report = la::run_matrix(
          configs, tasks, trials,
          [&](const la::AgentConfig& config, const la::EvalTask& task, int trial) {
            return source.make(static_cast<std::size_t>(trial), config, task.id);
          },
          options);
      fs::create_directories(eval_out);
      std::ofstream(fs::path(eval_out) / "report.txt") << report.to_table();
      std::ofstream(fs::path(eval_out) / "report.json") << report.to_json();
      std::cout << report.to_table();
      std::cout << "report: " << (fs::path(eval_out) / "report.json").string() << "\n";
      return kExitOk;
    }

    if (*render) {
      la::Scene scene = la::load_scene_file(render_scene);
      la::AgentConfig config;
      config.image_width = width;
      config.image_height = height;
      config.pixels_per_unit = scale;
      config.validate();
      auto views = la::render_views(scene, config);
      fs::create_directories(render_out);
      la::write_png(views.overview, fs::path(render_out) / "overview.png");
      la::write_png(views.topdown, fs::path(render_out) / "topdown.png");
      std::cout << "overview " << views.overview.content_hash() << "\n"
                << "topdown  " << views.topdown.content_hash() << "\n";
      return kExitOk;
    }

    if (*serve) {
      auto config = config_for(serve_method, 0, false);
      auto source = std::make_shared<BackendSource>(serve_backend);
      la::ServiceOptions options;
      options.fixtures_dir = fixtures_dir;
      options.data_dir = data_dir;
      options.default_config = config;
      options.factory = make_factory("");
      options.backends = [source, config](const std::string&, int episode, const std::string&) {
        return source->make(static_cast<std::size_t>(episode), config, std::nullopt);
      };
      la::Service service(std::move(options));
      std::signal(SIGINT, [](int) { g_stop = 1; });
      std::signal(SIGTERM, [](int) { g_stop = 1; });
      std::thread watcher([&] {
        while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
        service.stop();
      });
      std::cout << "serving on http://" << host << ":" << port << "/api/v1/\n" << std::flush;
      bool ok = service.listen(host, port);
      g_stop = 1;
      watcher.join();
      return ok ? kExitOk : kExitError;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitUsage;
}
