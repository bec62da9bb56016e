#include <doctest.h>

#include "layout_agent/prompt.hpp"
#include "test_support.hpp"

using namespace layout_agent;

namespace {

StepRecord step(Action action, StepOutcome outcome) {
  StepRecord r;
  r.raw_output = action_to_json(action);
  r.action = action;
  r.resolved = action;
  r.outcome = std::move(outcome);
  return r;
}

Transcript sample_history() {
  Transcript t;
  t.append(step({"go right of the house", MoveCursor{Vec2{3, 0}}}, {StepStatus::applied, ""}));
  t.append(step({"place it", PlaceObject{"tree"}}, {StepStatus::applied, ""}));
  t.append(step({"far away", MoveCursor{Vec2{25, 0}}}, {StepStatus::rejected, "out of bounds"}));
  StepRecord bad;
  bad.raw_output = "hmm";
  bad.error = ProtocolError{ProtocolErrorKind::no_json_found, "no JSON object found"};
  t.append(bad);
  t.append(step({"back", MoveCursor{Vec2{3, 1}}}, {StepStatus::applied, ""}));
  return t;
}

Scene sample_scene() {
  Scene scene = test_support::fixture("meadow_house");
  scene.add_object({"obj1", "tree", Vec2{3, 0}, Footprint{1, 1, 3}});
  REQUIRE(scene.set_cursor(Vec2{3, 1}));
  return scene;
}

PromptBundle build(const AgentConfig& config, const Transcript& history, const Scene& scene) {
  std::optional<RenderedViews> views;
  if (config.include_status_image) views = render_views(scene, config);
  return build_prompt(config, "Place one tree in the immediate vicinity of the house.", history,
                      scene, views);
}

std::vector<std::string> texts(const PromptBundle& b, Channel c) {
  std::vector<std::string> out;
  for (const auto* p : b.parts(c)) out.push_back(p->is_image() ? p->image_hash : p->text);
  return out;
}

const std::vector<Channel> kChannels = {Channel::instruction, Channel::history,
                                        Channel::status_text, Channel::status_image};

/// Channels whose content differs between two bundles; "system" stands for the common prompt.
std::vector<std::string> diff(const PromptBundle& a, const PromptBundle& b) {
  std::vector<std::string> out;
  if (a.system_text != b.system_text) out.push_back("system");
  for (Channel c : kChannels) {
    if (texts(a, c) != texts(b, c)) out.emplace_back(to_string(c));
  }
  return out;
}

}  // namespace

TEST_CASE("render_history") {
  CHECK(render_history(Transcript{}) == "");

  Transcript two;
  two.append(step({"a", MoveCursor{Vec2{4, 7}}}, {StepStatus::applied, ""}));
  two.append(step({"b", PlaceObject{"tree"}}, {StepStatus::applied, ""}));
  CHECK(render_history(two) ==
        "{\"thought\":\"a\",\"function\":\"move_cursor\",\"parameters\":{\"x\":4.0,\"y\":7.0}}\n"
        "{\"thought\":\"b\",\"function\":\"place_object\",\"parameters\":{\"object_name\":\"tree\"}}\n");

  auto text = render_history(sample_history());
  CHECK(text.find("{\"x\":25.0,\"y\":0.0}}\nREJECTED: out of bounds\n") != std::string::npos);
  CHECK(text.find("INVALID OUTPUT: no JSON object found\n") != std::string::npos);
  CHECK(text.find("\"thought\":\"go right of the house\"") != std::string::npos);
}

TEST_CASE("step zero of method1 carries every channel in order") {
  auto config = *preset_config("method1");
  auto bundle = build(config, Transcript{}, test_support::fixture("meadow_house"));
  CHECK_FALSE(bundle.system_text.empty());
  REQUIRE(bundle.user_parts.size() == 5);
  CHECK(bundle.user_parts[0].channel == Channel::instruction);
  CHECK(bundle.user_parts[1].channel == Channel::history);
  CHECK(bundle.user_parts[1].text.find(kEmptyHistoryMarker) != std::string::npos);
  CHECK(bundle.user_parts[2].channel == Channel::status_text);
  CHECK(bundle.user_parts[3].view == "overview");
  CHECK(bundle.user_parts[4].view == "topdown");
  CHECK(bundle.user_parts[3].image->width() == 512);
  CHECK(bundle.user_parts[3].image->height() == 256);
}

TEST_CASE("each ablation removes or degrades exactly its channel") {
  const Transcript history = sample_history();
  const Scene scene = sample_scene();
  const auto base = build(*preset_config("method1"), history, scene);

  SUBCASE("method2: no history") {
    auto b = build(*preset_config("method2"), history, scene);
    CHECK(diff(base, b) == std::vector<std::string>{"history"});
    CHECK(b.parts(Channel::history).empty());
  }
  SUBCASE("method3: no images") {
    auto b = build(*preset_config("method3"), history, scene);
    CHECK(diff(base, b) == std::vector<std::string>{"status_image"});
    CHECK(b.parts(Channel::status_image).empty());
  }
  SUBCASE("method4: cursor-only status text") {
    auto b = build(*preset_config("method4"), history, scene);
    CHECK(diff(base, b) == std::vector<std::string>{"status_text"});
    REQUIRE(b.parts(Channel::status_text).size() == 1);
    auto text = b.parts(Channel::status_text)[0]->text;
    auto body = text.substr(text.find('\n') + 1);
    CHECK(body == "name: cursor, x: 3.0, y: 1.0, width: 0.5, depth: 0.5\n");
    CHECK(base.parts(Channel::status_text)[0]->text.find("name: house") != std::string::npos);
  }
  SUBCASE("method5: thought dropped from the schema") {
    auto b = build(*preset_config("method5"), history, scene);
    CHECK(diff(base, b) == std::vector<std::string>{"system"});
    CHECK(base.system_text.find("\"thought\"") != std::string::npos);
    CHECK(b.system_text.find("thought") == std::string::npos);
    CHECK(preset_config("method5")->cot == false);
  }
  SUBCASE("method6: relative wording") {
    auto b = build(*preset_config("method6"), history, scene);
    CHECK(diff(base, b) == std::vector<std::string>{"system"});
    CHECK(base.system_text.find("{\"x\": 4, \"y\": 7}") != std::string::npos);
    CHECK(b.system_text.find("{\"x\": 1, \"y\": 2}") != std::string::npos);
    CHECK(b.system_text.find("{\"x\": 4, \"y\": 7}") == std::string::npos);
    CHECK(preset_config("method6")->position_mode == PositionMode::relative);
  }
}

TEST_CASE("method2 shows no history even after five steps") {
  auto b = build(*preset_config("method2"), sample_history(), sample_scene());
  for (const auto& part : b.user_parts) {
    CHECK(part.text.find("move_cursor") == std::string::npos);
    CHECK(part.text.find("REJECTED") == std::string::npos);
  }
}

TEST_CASE("builds are deterministic") {
  for (const auto& config : all_presets()) {
    auto a = build(config, sample_history(), sample_scene());
    auto b = build(config, sample_history(), sample_scene());
    CHECK(diff(a, b).empty());
    CHECK(a.hash() == b.hash());
  }
  // Hash depends on content.
  auto a = build(*preset_config("method1"), sample_history(), sample_scene());
  auto b = build(*preset_config("method1"), Transcript{}, sample_scene());
  CHECK(a.hash() != b.hash());
}

TEST_CASE("views must match the image switch") {
  auto config = *preset_config("method3");
  Scene scene;
  CHECK_THROWS_AS(build_prompt(config, "x", {}, scene, render_views(scene, config)),
                  std::invalid_argument);
  CHECK_THROWS_AS(build_prompt(*preset_config("method1"), "x", {}, scene, std::nullopt),
                  std::invalid_argument);
}

TEST_CASE("templates") {
  CHECK(render_template("a {{x}} b {{y}}", {{"x", "1"}, {"y", "2"}}) == "a 1 b 2");
  CHECK_THROWS_AS(render_template("{{nope}}", {}), std::invalid_argument);
  CHECK_THROWS_AS(render_template("{{x", {{"x", "1"}}), std::invalid_argument);

  const auto& builtin = PromptTemplates::builtin();
  CHECK(builtin.version() == "v1");
  auto on_disk = PromptTemplates::load(test_support::source_dir() / "prompts/v1");
  for (const char* name : {"common", "format_cot", "format_plain", "move_absolute", "move_relative"}) {
    CHECK(builtin.get(name) == on_disk.get(name));
  }
  // The common prompt depends only on the CoT and position-mode flags.
  auto c = *preset_config("method1");
  auto d = *preset_config("method4");
  CHECK(common_prompt(c) == common_prompt(d));
  CHECK(common_prompt(c).find("{{") == std::string::npos);
}
