#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "layout_agent/action.hpp"
#include "layout_agent/geometry.hpp"

namespace layout_agent {

class ObjectFactory;

enum class ObjectOrigin { preinstalled, agent_placed };

struct SceneObject {
  std::string id;
  std::string name;
  Vec2 position;  // footprint center
  Footprint footprint;
  ObjectOrigin origin = ObjectOrigin::agent_placed;
  std::string asset_ref;

  Rect rect() const { return Rect::centered(position, footprint.width(), footprint.depth()); }
  friend bool operator==(const SceneObject&, const SceneObject&) = default;
};

/// Axis-aligned wall segment; start and end share either x or y.
struct Wall {
  std::string id;
  Vec2 start;
  Vec2 end;

  Rect rect() const {
    return {std::min(start.x(), end.x()), std::min(start.y(), end.y()),
            std::max(start.x(), end.x()), std::max(start.y(), end.y())};
  }
  friend bool operator==(const Wall&, const Wall&) = default;
};

/// Displayed extent of the cursor in the bounding-box text.
inline constexpr double kCursorNominalSize = 0.5;

/// Ground-plane world state. Invariants (cursor and object centers inside bounds, unique ids)
/// are enforced by the mutating members and by deserialize_scene.
class Scene {
 public:
  /// 20x20 units centered at the origin, grid interval 1, cursor at the origin.
  Scene();
  Scene(Rect bounds, double grid_interval, Vec2 cursor);

  const Rect& bounds() const { return bounds_; }
  double grid_interval() const { return grid_interval_; }
  Vec2 cursor() const { return cursor_; }
  const std::vector<SceneObject>& objects() const { return objects_; }
  const std::vector<Wall>& walls() const { return walls_; }

  const SceneObject* find_object(std::string_view id) const;
  const Wall* find_wall(std::string_view id) const;

  /// Returns false (and changes nothing) when `target` is outside bounds.
  bool set_cursor(Vec2 target);
  /// Throws std::invalid_argument on duplicate id or center outside bounds.
  void add_object(SceneObject object);
  void add_wall(Wall wall);
  /// Smallest "objN" id not already used.
  std::string next_object_id() const;

  friend bool operator==(const Scene&, const Scene&) = default;

 private:
  Rect bounds_;
  double grid_interval_ = 1.0;
  Vec2 cursor_;
  std::vector<SceneObject> objects_;
  std::vector<Wall> walls_;
};

enum class StepStatus { applied, rejected, finished };

struct StepOutcome {
  StepStatus status;
  std::string detail;

  friend bool operator==(const StepOutcome&, const StepOutcome&) = default;
};

std::string_view to_string(StepStatus status);
std::string_view to_string(ObjectOrigin origin);

struct ApplyOptions {
  /// Reject placements whose footprint overlaps an existing object.
  bool strict_collision = false;
};

/// Applies an absolute-position action. Rejected outcomes never modify `scene`.
/// Footprints of placed objects come from `factory`.
StepOutcome apply_action(Scene& scene, const Action& action, ObjectFactory& factory,
                         const ApplyOptions& options = {},
                         std::vector<std::string>* warnings = nullptr);

/// One line per entity: cursor first, then objects in insertion order.
std::string bbox_text(const Scene& scene, bool cursor_only);

struct SceneParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Canonical JSON text (sorted keys, two-space indent, trailing newline).
std::string serialize_scene(const Scene& scene);
/// Throws SceneParseError naming the line or field at fault.
Scene deserialize_scene(std::string_view text);
Scene load_scene_file(const std::string& path);

/// SHA-256 of the canonical serialization.
std::string scene_hash(const Scene& scene);

}  // namespace layout_agent
