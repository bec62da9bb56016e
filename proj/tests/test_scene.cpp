#include <doctest.h>

#include <random>

#include "layout_agent/object_factory.hpp"
#include "layout_agent/scene.hpp"
#include "test_support.hpp"

using namespace layout_agent;

namespace {

Action move(double x, double y) { return Action{std::nullopt, MoveCursor{Vec2{x, y}}}; }
Action place(const std::string& name) { return Action{std::nullopt, PlaceObject{name}}; }

Scene house_tree_scene() {
  Scene scene;
  scene.add_object({"house", "house", Vec2{0, 0}, Footprint{4, 4, 3}, ObjectOrigin::preinstalled, "house"});
  scene.add_object({"obj1", "tree", Vec2{3, 5}, Footprint{1, 1, 3}, ObjectOrigin::agent_placed, "tree"});
  return scene;
}

}  // namespace

TEST_CASE("identity move is applied and changes nothing") {
  Scene scene = test_support::fixture("meadow_house");
  std::string before = scene_hash(scene);
  ObjectFactory factory;
  auto outcome = apply_action(scene, move(0, 0), factory);
  CHECK(outcome.status == StepStatus::applied);
  CHECK(scene_hash(scene) == before);
}

TEST_CASE("out-of-bounds move is rejected and leaves the scene bit-identical") {
  Scene scene = test_support::fixture("meadow_house");
  std::string before = serialize_scene(scene);
  ObjectFactory factory;
  auto outcome = apply_action(scene, move(25, 0), factory);
  CHECK(outcome.status == StepStatus::rejected);
  CHECK(outcome.detail == "out of bounds");
  CHECK(serialize_scene(scene) == before);
}

TEST_CASE("place_object lands exactly at the cursor") {
  Scene scene;
  ObjectFactory factory;
  REQUIRE(apply_action(scene, move(4, 7), factory).status == StepStatus::applied);
  auto outcome = apply_action(scene, place("tree"), factory);
  CHECK(outcome.status == StepStatus::applied);
  REQUIRE(scene.objects().size() == 1);
  CHECK(scene.objects().back().position == Vec2{4, 7});
  CHECK(scene.objects().back().footprint == Footprint{1, 1, 3});
  CHECK(scene.objects().back().origin == ObjectOrigin::agent_placed);
}

TEST_CASE("finish mutates nothing and carries the reason") {
  Scene scene = test_support::fixture("meadow_house");
  Scene copy = scene;
  ObjectFactory factory;
  auto outcome = apply_action(scene, Action{"t", FinishAction{"layout complete"}}, factory);
  CHECK(outcome == StepOutcome{StepStatus::finished, "layout complete"});
  CHECK(scene == copy);
}

TEST_CASE("overlap warns by default and is rejected in strict mode") {
  ObjectFactory factory;
  std::vector<std::string> warnings;
  Scene scene = test_support::fixture("meadow_house");
  auto outcome = apply_action(scene, place("tree"), factory, {}, &warnings);
  CHECK(outcome.status == StepStatus::applied);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].rfind("overlap", 0) == 0);

  Scene strict = test_support::fixture("meadow_house");
  std::string before = scene_hash(strict);
  outcome = apply_action(strict, place("tree"), factory, ApplyOptions{true});
  CHECK(outcome == StepOutcome{StepStatus::rejected, "overlap"});
  CHECK(scene_hash(strict) == before);

  // Touching edges do not overlap: a 1x1 tree centered at x=2.5 abuts the 4x4 house.
  REQUIRE(apply_action(strict, move(2.5, 0), factory).status == StepStatus::applied);
  CHECK(apply_action(strict, place("tree"), factory, ApplyOptions{true}).status ==
        StepStatus::applied);
}

TEST_CASE("random action sequences keep the cursor in bounds and placements at the cursor") {
  std::mt19937 rng(1234);
  std::uniform_real_distribution<double> coord(-15.0, 15.0);
  std::uniform_int_distribution<int> pick(0, 9);
  const char* names[] = {"tree", "house", "bed", "rock", "desk"};
  ObjectFactory factory;
  for (int trial = 0; trial < 200; ++trial) {
    Scene scene;
    for (int i = 0; i < 30; ++i) {
      int k = pick(rng);
      if (k < 6) {
        Scene before = scene;
        auto outcome = apply_action(scene, move(coord(rng), coord(rng)), factory);
        if (outcome.status == StepStatus::rejected) CHECK(scene == before);
      } else {
        Vec2 cursor = scene.cursor();
        auto outcome = apply_action(scene, place(names[k % 5]), factory);
        REQUIRE(outcome.status == StepStatus::applied);
        CHECK(scene.objects().back().position == cursor);
      }
      REQUIRE(scene.bounds().contains(scene.cursor()));
    }
  }
}

TEST_CASE("bbox text") {
  SUBCASE("empty scene has only the cursor line") {
    Scene scene;
    CHECK(bbox_text(scene, false) == "name: cursor, x: 0.0, y: 0.0, width: 0.5, depth: 0.5\n");
  }
  SUBCASE("house and tree match the golden file") {
    Scene scene = house_tree_scene();
    CHECK(bbox_text(scene, false) ==
          test_support::read_file(test_support::source_dir() / "tests/golden/bbox_house_tree.txt"));
    CHECK(bbox_text(scene, true) == "name: cursor, x: 0.0, y: 0.0, width: 0.5, depth: 0.5\n");
  }
  SUBCASE("equal scenes give equal text; rounding and negative zero") {
    Scene a = house_tree_scene();
    Scene b = deserialize_scene(serialize_scene(a));
    CHECK(bbox_text(a, false) == bbox_text(b, false));
    Scene c;
    REQUIRE(c.set_cursor(Vec2{-0.04, 2.25}));
    CHECK(bbox_text(c, true) == "name: cursor, x: 0.0, y: 2.2, width: 0.5, depth: 0.5\n");
  }
}

TEST_CASE("scene file round trip") {
  SUBCASE("checked-in fixtures are canonical") {
    for (const char* name : {"meadow_house", "empty_meadow", "room"}) {
      auto text = test_support::read_file(test_support::source_dir() / "fixtures" /
                                          (std::string(name) + ".json"));
      CHECK_MESSAGE(serialize_scene(deserialize_scene(text)) == text, name);
    }
  }
  SUBCASE("objects keep their order and fields") {
    Scene scene = house_tree_scene();
    scene.add_wall({"west", Vec2{-10, -10}, Vec2{-10, 10}});
    REQUIRE(scene.set_cursor(Vec2{1.25, -3.5}));
    auto text = serialize_scene(scene);
    Scene back = deserialize_scene(text);
    CHECK(back == scene);
    CHECK(serialize_scene(back) == text);
  }
  SUBCASE("meadow fixture has exactly one preinstalled object") {
    Scene scene = test_support::fixture("meadow_house");
    REQUIRE(scene.objects().size() == 1);
    CHECK(scene.objects()[0].origin == ObjectOrigin::preinstalled);
    CHECK(scene.objects()[0].name == "house");
  }
  SUBCASE("room fixture has four walls") {
    CHECK(test_support::fixture("room").walls().size() == 4);
  }
}

TEST_CASE("malformed scene files name the fault") {
  auto message_of = [](std::string_view text) -> std::string {
    try {
      deserialize_scene(text);
    } catch (const SceneParseError& e) {
      return e.what();
    }
    return "";
  };
  CHECK(message_of(R"({"grid_interval": 1, "cursor": {"x": 0, "y": 0}, "objects": [], "walls": []})")
            .find("bounds") != std::string::npos);
  CHECK(message_of("{\n  \"bounds\": \n").find("line") != std::string::npos);
  CHECK(message_of(R"({"bounds": {"min_x": -1, "min_y": -1, "max_x": 1, "max_y": 1},
      "grid_interval": 1, "cursor": {"x": 5, "y": 0}, "objects": [], "walls": []})") != "");
}

TEST_CASE("scene invariants") {
  Scene scene;
  CHECK_FALSE(scene.set_cursor(Vec2{10.5, 0}));
  CHECK(scene.cursor() == Vec2{0, 0});
  CHECK_THROWS_AS(scene.add_object({"a", "x", Vec2{11, 0}, Footprint{1, 1, 1}}), std::invalid_argument);
  scene.add_object({"obj1", "x", Vec2{0, 0}, Footprint{1, 1, 1}});
  CHECK_THROWS_AS(scene.add_object({"obj1", "y", Vec2{1, 0}, Footprint{1, 1, 1}}), std::invalid_argument);
  CHECK(scene.next_object_id() == "obj2");
  CHECK_THROWS_AS(scene.add_wall({"w", Vec2{0, 0}, Vec2{1, 1}}), std::invalid_argument);
  CHECK_THROWS_AS(Vec2(std::nan(""), 0), std::invalid_argument);
}
