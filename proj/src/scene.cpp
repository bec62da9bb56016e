#include "layout_agent/scene.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "layout_agent/hash.hpp"
#include "layout_agent/object_factory.hpp"

namespace layout_agent {

using nlohmann::json;

Scene::Scene() : Scene(Rect{-10.0, -10.0, 10.0, 10.0}, 1.0, Vec2{0.0, 0.0}) {}

Scene::Scene(Rect bounds, double grid_interval, Vec2 cursor)
    : bounds_(bounds), grid_interval_(grid_interval), cursor_(cursor) {
  if (!(bounds.min_x < bounds.max_x) || !(bounds.min_y < bounds.max_y) ||
      !std::isfinite(bounds.min_x) || !std::isfinite(bounds.max_x) ||
      !std::isfinite(bounds.min_y) || !std::isfinite(bounds.max_y)) {
    throw std::invalid_argument("Scene: bounds must be a non-empty finite rectangle");
  }
  if (!(grid_interval > 0.0) || !std::isfinite(grid_interval)) {
    throw std::invalid_argument("Scene: grid_interval must be > 0");
  }
  if (!bounds_.contains(cursor)) {
    throw std::invalid_argument("Scene: cursor outside bounds");
  }
}

const SceneObject* Scene::find_object(std::string_view id) const {
  auto it = std::find_if(objects_.begin(), objects_.end(),
                         [&](const SceneObject& o) { return o.id == id; });
  return it == objects_.end() ? nullptr : &*it;
}

const Wall* Scene::find_wall(std::string_view id) const {
  auto it = std::find_if(walls_.begin(), walls_.end(), [&](const Wall& w) { return w.id == id; });
  return it == walls_.end() ? nullptr : &*it;
}

bool Scene::set_cursor(Vec2 target) {
  if (!bounds_.contains(target)) return false;
  cursor_ = target;
  return true;
}

void Scene::add_object(SceneObject object) {
  if (object.id.empty() || find_object(object.id) != nullptr) {
    throw std::invalid_argument("Scene: duplicate or empty object id '" + object.id + "'");
  }
  if (!bounds_.contains(object.position)) {
    throw std::invalid_argument("Scene: object '" + object.id + "' center outside bounds");
  }
  objects_.push_back(std::move(object));
}

void Scene::add_wall(Wall wall) {
  if (wall.id.empty() || find_wall(wall.id) != nullptr) {
    throw std::invalid_argument("Scene: duplicate or empty wall id '" + wall.id + "'");
  }
  if (wall.start.x() != wall.end.x() && wall.start.y() != wall.end.y()) {
    throw std::invalid_argument("Scene: wall '" + wall.id + "' is not axis-aligned");
  }
  walls_.push_back(std::move(wall));
}

std::string Scene::next_object_id() const {
  for (std::size_t n = objects_.size() + 1;; ++n) {
    std::string id = "obj" + std::to_string(n);
    if (find_object(id) == nullptr) return id;
  }
}

std::string_view to_string(StepStatus status) {
  switch (status) {
    case StepStatus::applied: return "applied";
    case StepStatus::rejected: return "rejected";
    case StepStatus::finished: return "finished";
  }
  return "unknown";
}

std::string_view to_string(ObjectOrigin origin) {
  return origin == ObjectOrigin::preinstalled ? "preinstalled" : "agent_placed";
}

StepOutcome apply_action(Scene& scene, const Action& action, ObjectFactory& factory,
                         const ApplyOptions& options, std::vector<std::string>* warnings) {
  if (const auto* move = std::get_if<MoveCursor>(&action.function)) {
    if (!scene.set_cursor(move->target)) {
      return {StepStatus::rejected, "out of bounds"};
    }
    return {StepStatus::applied, ""};
  }
  if (const auto* place = std::get_if<PlaceObject>(&action.function)) {
    Asset asset = factory.get_or_create(place->object_name, warnings);
    SceneObject object{scene.next_object_id(), place->object_name, scene.cursor(),
                       asset.footprint,        ObjectOrigin::agent_placed, asset.key};
    const Rect rect = object.rect();
    std::vector<std::string> overlapping;
    for (const auto& other : scene.objects()) {
      if (rects_overlap(rect, other.rect())) overlapping.push_back(other.id);
    }
    if (!overlapping.empty()) {
      if (options.strict_collision) return {StepStatus::rejected, "overlap"};
      if (warnings != nullptr) {
        std::string msg = "overlap: " + object.id + " intersects";
        for (const auto& id : overlapping) msg += " " + id;
        warnings->push_back(std::move(msg));
      }
    }
    scene.add_object(std::move(object));
    return {StepStatus::applied, ""};
  }
  return {StepStatus::finished, std::get<FinishAction>(action.function).reason};
}

namespace {

std::string one_decimal(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  std::string s = buf;
  if (s == "-0.0") s = "0.0";
  return s;
}

std::string bbox_line(std::string_view name, double x, double y, double w, double d) {
  std::string line = "name: ";
  line += name;
  line += ", x: " + one_decimal(x) + ", y: " + one_decimal(y) + ", width: " + one_decimal(w) +
          ", depth: " + one_decimal(d) + "\n";
  return line;
}

}  // namespace

std::string bbox_text(const Scene& scene, bool cursor_only) {
  std::string out = bbox_line("cursor", scene.cursor().x(), scene.cursor().y(),
                              kCursorNominalSize, kCursorNominalSize);
  if (cursor_only) return out;
  for (const auto& o : scene.objects()) {
    out += bbox_line(o.name, o.position.x(), o.position.y(), o.footprint.width(),
                     o.footprint.depth());
  }
  return out;
}

namespace {

json vec_json(Vec2 v) { return json{{"x", v.x()}, {"y", v.y()}}; }

// Field accessors that report the JSON path on failure.
const json& field(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) throw SceneParseError("scene: '" + path + "' must be an object");
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw SceneParseError("scene: missing field '" + (path.empty() ? key : path + "." + key) + "'");
  }
  return *it;
}

double number(const json& obj, const std::string& key, const std::string& path) {
  const json& v = field(obj, key, path);
  if (!v.is_number()) {
    throw SceneParseError("scene: field '" + (path.empty() ? key : path + "." + key) +
                          "' must be a number");
  }
  return v.get<double>();
}

std::string string_field(const json& obj, const std::string& key, const std::string& path) {
  const json& v = field(obj, key, path);
  if (!v.is_string()) {
    throw SceneParseError("scene: field '" + path + "." + key + "' must be a string");
  }
  return v.get<std::string>();
}

Vec2 vec_field(const json& obj, const std::string& key, const std::string& path) {
  const std::string sub = path.empty() ? key : path + "." + key;
  const json& v = field(obj, key, path);
  return Vec2{number(v, "x", sub), number(v, "y", sub)};
}

}  // namespace

std::string serialize_scene(const Scene& scene) {
  json doc;
  const Rect& b = scene.bounds();
  doc["bounds"] = {{"min_x", b.min_x}, {"min_y", b.min_y}, {"max_x", b.max_x}, {"max_y", b.max_y}};
  doc["grid_interval"] = scene.grid_interval();
  doc["cursor"] = vec_json(scene.cursor());
  json objects = json::array();
  for (const auto& o : scene.objects()) {
    objects.push_back({{"id", o.id},
                       {"name", o.name},
                       {"position", vec_json(o.position)},
                       {"footprint",
                        {{"width", o.footprint.width()},
                         {"depth", o.footprint.depth()},
                         {"height", o.footprint.height()}}},
                       {"origin", to_string(o.origin)},
                       {"asset_ref", o.asset_ref}});
  }
  doc["objects"] = std::move(objects);
  json walls = json::array();
  for (const auto& w : scene.walls()) {
    walls.push_back({{"id", w.id}, {"start", vec_json(w.start)}, {"end", vec_json(w.end)}});
  }
  doc["walls"] = std::move(walls);
  return doc.dump(2) + "\n";
}

Scene deserialize_scene(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    // e.what() carries "at line L, column C".
    throw SceneParseError(std::string("scene: malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw SceneParseError("scene: top level must be an object");

  try {
    const json& b = field(doc, "bounds", "");
    Rect bounds{number(b, "min_x", "bounds"), number(b, "min_y", "bounds"),
                number(b, "max_x", "bounds"), number(b, "max_y", "bounds")};
    double grid = doc.contains("grid_interval") ? number(doc, "grid_interval", "") : 1.0;
    Vec2 cursor = vec_field(doc, "cursor", "");
    Scene scene(bounds, grid, cursor);

    if (doc.contains("objects")) {
      const json& objects = doc["objects"];
      if (!objects.is_array()) throw SceneParseError("scene: field 'objects' must be an array");
      for (std::size_t i = 0; i < objects.size(); ++i) {
        const std::string path = "objects[" + std::to_string(i) + "]";
        const json& o = objects[i];
        const std::string fp_path = path + ".footprint";
        const json& fp = field(o, "footprint", path);
        std::string origin = string_field(o, "origin", path);
        if (origin != "preinstalled" && origin != "agent_placed") {
          throw SceneParseError("scene: field '" + path +
                                ".origin' must be preinstalled or agent_placed");
        }
        Footprint footprint = [&] {
          try {
            return Footprint{number(fp, "width", fp_path), number(fp, "depth", fp_path),
                             number(fp, "height", fp_path)};
          } catch (const std::invalid_argument& e) {
            throw SceneParseError("scene: field '" + fp_path + "': " + e.what());
          }
        }();
        std::string name = string_field(o, "name", path);
        std::string asset_ref =
            o.contains("asset_ref") ? string_field(o, "asset_ref", path) : normalize_object_name(name);
        scene.add_object(SceneObject{string_field(o, "id", path), std::move(name),
                                     vec_field(o, "position", path), footprint,
                                     origin == "preinstalled" ? ObjectOrigin::preinstalled
                                                              : ObjectOrigin::agent_placed,
                                     std::move(asset_ref)});
      }
    }
    if (doc.contains("walls")) {
      const json& walls = doc["walls"];
      if (!walls.is_array()) throw SceneParseError("scene: field 'walls' must be an array");
      for (std::size_t i = 0; i < walls.size(); ++i) {
        const std::string path = "walls[" + std::to_string(i) + "]";
        scene.add_wall(Wall{string_field(walls[i], "id", path), vec_field(walls[i], "start", path),
                            vec_field(walls[i], "end", path)});
      }
    }
    return scene;
  } catch (const SceneParseError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw SceneParseError(std::string("scene: invalid value: ") + e.what());
  }
}

Scene load_scene_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SceneParseError("scene: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return deserialize_scene(ss.str());
  } catch (const SceneParseError& e) {
    throw SceneParseError(path + ": " + e.what());
  }
}

std::string scene_hash(const Scene& scene) { return sha256_hex(serialize_scene(scene)); }

}  // namespace layout_agent
