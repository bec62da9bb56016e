#include <doctest.h>

#include <sstream>

#include "layout_agent/agent.hpp"
#include "layout_agent/eval.hpp"
#include "test_support.hpp"

using namespace layout_agent;
using test_support::finish_json;
using test_support::move_json;
using test_support::place_json;

namespace {

/// Scripted responses that also keeps every bundle it was shown.
class SpyBackend final : public Backend {
 public:
  explicit SpyBackend(std::vector<std::string> responses) : inner_(std::move(responses)) {}
  std::string generate(const PromptBundle& bundle, const GenerationParams& params) override {
    bundles.push_back(bundle);
    temperatures.push_back(params.temperature);
    return inner_.generate(bundle, params);
  }
  std::vector<PromptBundle> bundles;
  std::vector<double> temperatures;

 private:
  ScriptedBackend inner_;
};

std::string history_text(const PromptBundle& b) {
  auto parts = b.parts(Channel::history);
  REQUIRE(parts.size() == 1);
  return parts[0]->text;
}

}  // namespace

TEST_CASE("immediate finish") {
  ObjectFactory factory;
  ScriptedBackend backend({finish_json("nothing to do")});
  auto r = run_episode(*preset_config("method1"), "do nothing", Scene{}, backend, {&factory});
  CHECK(r.termination == Termination::finished);
  REQUIRE(r.transcript.steps.size() == 1);
  CHECK(r.transcript.termination_detail == "nothing to do");
  CHECK(r.final_scene == Scene{});
}

TEST_CASE("persistent garbage ends the episode as unrecoverable after three steps") {
  ObjectFactory factory;
  ScriptedBackend backend({"nope", "still nope", "{broken", move_json(1, 1)});
  auto r = run_episode(*preset_config("method1"), "x", Scene{}, backend, {&factory});
  CHECK(r.termination == Termination::unrecoverable_parse);
  CHECK(r.transcript.steps.size() == 3);
  for (const auto& s : r.transcript.steps) {
    CHECK(s.error.has_value());
    CHECK_FALSE(s.outcome.has_value());
  }
}

TEST_CASE("a valid action resets the parse-failure count") {
  ObjectFactory factory;
  ScriptedBackend backend({"x", "y", move_json(1, 1), "z", "w", finish_json()});
  auto r = run_episode(*preset_config("method1"), "x", Scene{}, backend, {&factory});
  CHECK(r.termination == Termination::finished);
  CHECK(r.transcript.steps.size() == 6);
  CHECK(r.final_scene.cursor() == Vec2{1, 1});
}

TEST_CASE("missing thought under chain-of-thought counts as a parse failure") {
  ObjectFactory factory;
  const std::string no_thought = R"({"function":"finish_action","parameters":{"reason":"r"}})";
  ScriptedBackend strict({no_thought, no_thought, no_thought});
  CHECK(run_episode(*preset_config("method1"), "x", Scene{}, strict, {&factory}).termination ==
        Termination::unrecoverable_parse);
  ScriptedBackend lenient({no_thought});
  CHECK(run_episode(*preset_config("method5"), "x", Scene{}, lenient, {&factory}).termination ==
        Termination::finished);
}

TEST_CASE("scripted golden episodes score 3 on every task") {
  auto tasks = load_tasks(test_support::source_dir() / "tasks");
  REQUIRE(tasks.size() == 5);
  for (const auto& task : tasks) {
    for (const char* preset : {"method1", "method6"}) {
      auto config = *preset_config(preset);
      std::string file = "task" + std::to_string(task.id) +
                         (config.position_mode == PositionMode::relative ? ".relative" : "") + ".jsonl";
      ScriptedBackend backend(load_script(test_support::source_dir() / "fixtures/scripts" / file));
      ObjectFactory factory;
      auto r = run_episode(config, task.instruction, task.initial_scene, backend, {&factory});
      CHECK_MESSAGE(r.termination == Termination::finished, file);
      auto score = score_task(task, r.final_scene);
      CHECK_MESSAGE(score.value == 3, file);
      CHECK(backend.remaining() == 0);
    }
  }
}

TEST_CASE("task 3 places trees in all four directions") {
  auto task = load_task(test_support::source_dir() / "tasks/3.json");
  ScriptedBackend backend(load_script(test_support::source_dir() / "fixtures/scripts/task3.jsonl"));
  ObjectFactory factory;
  auto r = run_episode(*preset_config("method1"), task.instruction, task.initial_scene, backend, {&factory});
  auto score = score_task(task, r.final_scene);
  CHECK(score.results.size() == 5);
  for (const auto& pr : score.results) CHECK_MESSAGE(pr.satisfied, pr.predicate.describe());
  CHECK(r.final_scene.objects().size() == 5);
}

TEST_CASE("the renderer is never called without the image channel") {
  int calls = 0;
  EpisodeOptions options;
  ObjectFactory factory;
  options.factory = &factory;
  options.renderer = [&](const Scene& s, const AgentConfig& c) {
    ++calls;
    return render_views(s, c);
  };
  std::vector<std::string> script = {move_json(1, 0), place_json("tree"), finish_json()};

  ScriptedBackend m3(script);
  auto r3 = run_episode(*preset_config("method3"), "x", Scene{}, m3, options);
  CHECK(r3.termination == Termination::finished);
  CHECK(calls == 0);
  for (const auto& s : r3.transcript.steps) CHECK(s.image_hashes.empty());

  ScriptedBackend m1(script);
  auto r1 = run_episode(*preset_config("method1"), "x", Scene{}, m1, options);
  CHECK(calls == 3);
  for (const auto& s : r1.transcript.steps) CHECK(s.image_hashes.size() == 2);
}

TEST_CASE("history replays prior actions with thoughts and rejections") {
  ObjectFactory factory;
  SpyBackend backend({move_json(3, 0, "right of the house"), move_json(40, 0, "too far"), "garbage",
                      place_json("tree", "put the tree"), finish_json()});
  auto r = run_episode(*preset_config("method1"), "x", test_support::fixture("meadow_house"), backend,
                       {&factory});
  REQUIRE(r.termination == Termination::finished);
  REQUIRE(backend.bundles.size() == 5);
  CHECK(history_text(backend.bundles[0]).find(kEmptyHistoryMarker) != std::string::npos);
  auto h1 = history_text(backend.bundles[1]);
  CHECK(h1.find(move_json(3, 0, "right of the house")) != std::string::npos);
  auto h2 = history_text(backend.bundles[2]);
  CHECK(h2.find(move_json(40, 0, "too far") + "\nREJECTED: out of bounds\n") != std::string::npos);
  auto h4 = history_text(backend.bundles[4]);
  CHECK(h4.find("INVALID OUTPUT: ") != std::string::npos);
  // Entries appear in execution order.
  CHECK(h4.find("right of the house") < h4.find("too far"));
  CHECK(h4.find("too far") < h4.find("INVALID OUTPUT"));
  CHECK(h4.find("INVALID OUTPUT") < h4.find("put the tree"));
  CHECK(r.final_scene.objects().back().position == Vec2{3, 0});
  for (double t : backend.temperatures) CHECK(t == doctest::Approx(0.1));
}

TEST_CASE("relative mode resolves against the cursor and records both forms") {
  ObjectFactory factory;
  Scene start;
  REQUIRE(start.set_cursor(Vec2{3, 5}));
  ScriptedBackend backend({move_json(1, 2), finish_json()});
  auto r = run_episode(*preset_config("method6"), "x", start, backend, {&factory});
  CHECK(r.final_scene.cursor() == Vec2{4, 7});
  const auto& s = r.transcript.steps[0];
  CHECK(std::get<MoveCursor>(s.action->function).target == Vec2{1, 2});
  CHECK(std::get<MoveCursor>(s.resolved->function).target == Vec2{4, 7});
}

TEST_CASE("step cap") {
  ObjectFactory factory;
  auto config = *preset_config("method3");
  config.max_steps = 4;
  std::vector<std::string> script;
  for (int i = 0; i < 10; ++i) script.push_back(move_json(i % 3, 0));
  ScriptedBackend backend(script);
  auto r = run_episode(config, "x", Scene{}, backend, {&factory});
  CHECK(r.termination == Termination::max_steps);
  CHECK(r.transcript.steps.size() == 4);
  CHECK(backend.calls() == 4);
}

TEST_CASE("backend failure keeps the last consistent scene") {
  ObjectFactory factory;
  ScriptedBackend backend({move_json(2, 2), place_json("rock")});
  auto r = run_episode(*preset_config("method1"), "x", Scene{}, backend, {&factory});
  CHECK(r.termination == Termination::backend_failure);
  CHECK(r.transcript.steps.size() == 2);
  CHECK(r.final_scene.objects().size() == 1);
  CHECK_FALSE(r.transcript.termination_detail.empty());
  CHECK(scene_hash(r.final_scene) == r.transcript.steps.back().scene_hash);
}

TEST_CASE("cancellation stops before the next step") {
  ObjectFactory factory;
  std::atomic<bool> cancel{false};
  EpisodeOptions options;
  options.factory = &factory;
  options.cancel = &cancel;
  options.on_step = [&](const StepEvent& e) {
    if (e.step.index == 1) cancel = true;
  };
  ScriptedBackend backend({move_json(1, 0), move_json(2, 0), move_json(3, 0), finish_json()});
  auto r = run_episode(*preset_config("method3"), "x", Scene{}, backend, options);
  CHECK(r.termination == Termination::cancelled);
  CHECK(r.transcript.steps.size() == 2);
  CHECK(r.final_scene.cursor() == Vec2{2, 0});
}

TEST_CASE("continue_episode starts from the prior final scene with a fresh history") {
  ObjectFactory factory;
  auto config = *preset_config("method1");
  ScriptedBackend first({move_json(3, 0), place_json("tree"), finish_json()});
  auto r1 = run_episode(config, "Place one tree near the house.", test_support::fixture("meadow_house"),
                        first, {&factory});
  REQUIRE(r1.termination == Termination::finished);

  SpyBackend second({move_json(-4, 0), place_json("bed"), finish_json()});
  auto r2 = continue_episode(r1, "Now add a bed to the left.", config, second, {&factory});
  CHECK(r2.termination == Termination::finished);
  CHECK(r2.transcript.start_scene_hash == scene_hash(r1.final_scene));
  CHECK(r2.transcript.instruction == "Now add a bed to the left.");
  REQUIRE(r2.final_scene.objects().size() == 3);
  CHECK(r2.final_scene.objects()[1].name == "tree");
  CHECK(r2.final_scene.objects()[2].name == "bed");
  CHECK(history_text(second.bundles[0]).find(kEmptyHistoryMarker) != std::string::npos);
  auto status = second.bundles[0].parts(Channel::status_text)[0]->text;
  CHECK(status.find("name: tree, x: 3.0") != std::string::npos);
  // The new episode starts where the cursor was left.
  CHECK(status.find("name: cursor, x: 3.0, y: 0.0") != std::string::npos);
}

TEST_CASE("episode artifacts on disk match the result") {
  auto dir = test_support::temp_dir("episode");
  ObjectFactory factory;
  EpisodeOptions options;
  options.factory = &factory;
  options.output_dir = dir;
  options.episode_id = "e1";
  std::vector<std::string> seen_hashes;
  options.on_step = [&](const StepEvent& e) { seen_hashes.push_back(scene_hash(e.scene)); };
  ScriptedBackend backend({move_json(3, 0), place_json("tree"), move_json(0, 0), finish_json()});
  auto r = run_episode(*preset_config("method1"), "x", test_support::fixture("meadow_house"), backend, options);

  auto back = transcript_from_jsonl(test_support::read_file(dir / "transcript.jsonl"));
  CHECK(transcript_to_jsonl(back) == transcript_to_jsonl(r.transcript));
  CHECK(back.termination == Termination::finished);
  CHECK(back.episode_id == "e1");
  CHECK(deserialize_scene(test_support::read_file(dir / "final_scene.json")) == r.final_scene);
  for (int k = 0; k < 4; ++k) {
    CHECK(std::filesystem::exists(dir / ("step" + std::to_string(k) + "_overview.png")));
    CHECK(std::filesystem::exists(dir / ("step" + std::to_string(k) + "_topdown.png")));
  }
  REQUIRE(seen_hashes.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(seen_hashes[i] == r.transcript.steps[i].scene_hash);
  CHECK(scene_hash(r.final_scene) == r.transcript.steps.back().scene_hash);
  // The tree at (3, 0) clears the house, so no overlap warning.
  CHECK(r.transcript.steps[1].warnings.empty());
  std::filesystem::remove_all(dir);
}

TEST_CASE("overlap warnings are recorded in the transcript") {
  ObjectFactory factory;
  ScriptedBackend backend({place_json("tree"), finish_json()});
  auto r = run_episode(*preset_config("method3"), "x", test_support::fixture("meadow_house"), backend,
                       {&factory});
  REQUIRE(r.transcript.steps[0].warnings.size() == 1);
  CHECK(r.transcript.steps[0].warnings[0].find("overlap") == 0);
}

TEST_CASE("invalid configuration is refused") {
  ObjectFactory factory;
  auto config = *preset_config("method1");
  config.max_steps = 0;
  ScriptedBackend backend({finish_json()});
  CHECK_THROWS_AS(run_episode(config, "x", Scene{}, backend, {&factory}), std::invalid_argument);
  CHECK_THROWS(run_episode(*preset_config("method1"), "x", Scene{}, backend, EpisodeOptions{}));
}

TEST_CASE("the loop is backend-agnostic: same result as applying the script directly") {
  auto tasks = load_tasks(test_support::source_dir() / "tasks");
  for (const auto& task : tasks) {
    auto script = load_script(test_support::source_dir() / "fixtures/scripts" /
                              ("task" + std::to_string(task.id) + ".jsonl"));
    ObjectFactory direct_factory;
    Scene direct = task.initial_scene;
    for (const auto& raw : script) {
      auto parsed = parse_action(raw, true);
      REQUIRE(parsed.ok());
      apply_action(direct, parsed.action(), direct_factory);
    }
    ObjectFactory factory;
    ScriptedBackend backend(script);
    auto r = run_episode(*preset_config("method1"), task.instruction, task.initial_scene, backend, {&factory});
    CHECK(scene_hash(r.final_scene) == scene_hash(direct));
  }
}

TEST_CASE("history holds exactly the prior entries at every step") {
  ObjectFactory factory;
  SpyBackend backend({move_json(1, 0), "junk", move_json(99, 0), place_json("tree"), move_json(2, 2), finish_json()});
  auto r = run_episode(*preset_config("method1"), "x", Scene{}, backend, {&factory});
  REQUIRE(r.termination == Termination::finished);
  for (std::size_t k = 0; k < backend.bundles.size(); ++k) {
    auto text = history_text(backend.bundles[k]);
    std::size_t entries = 0;
    std::istringstream lines(text.substr(text.find('\n') + 1));
    for (std::string line; std::getline(lines, line);) {
      if (line.starts_with("{") || line.starts_with("INVALID OUTPUT: ")) ++entries;
    }
    CHECK_MESSAGE(entries == k, "step " << k);
  }
}

TEST_CASE("continue_episode edge cases") {
  ObjectFactory factory;
  auto config = *preset_config("method3");
  ScriptedBackend build({move_json(5, 5), place_json("house"), finish_json()});
  auto prior = run_episode(config, "place a house", Scene{}, build, {&factory});

  SUBCASE("immediate finish leaves the scene unchanged") {
    ScriptedBackend done({finish_json()});
    auto r = continue_episode(prior, "nothing else", config, done, {&factory});
    CHECK(r.final_scene == prior.final_scene);
  }
  SUBCASE("tree placed relative to the previously placed house") {
    ScriptedBackend tree({move_json(8, 5), place_json("tree"), finish_json()});
    auto r = continue_episode(prior, "place a tree near the house", config, tree, {&factory});
    Predicate near;
    near.kind = PredicateKind::near;
    near.subject = "tree";
    near.reference = "house";
    near.threshold = 2;
    CHECK(check_predicate(r.final_scene, near));
  }
  SUBCASE("after a backend failure, continue from the last consistent scene") {
    ScriptedBackend broken({move_json(-3, -3), place_json("rock")});
    auto failed = continue_episode(prior, "add a rock", config, broken, {&factory});
    REQUIRE(failed.termination == Termination::backend_failure);
    ScriptedBackend more({finish_json()});
    auto r = continue_episode(failed, "done", config, more, {&factory});
    CHECK(r.termination == Termination::finished);
    CHECK(r.final_scene == failed.final_scene);
    CHECK(r.final_scene.objects().size() == 2);
  }
}
