#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace layout_agent {

/// Ground-plane coordinate in grid units. Always finite.
class Vec2 {
 public:
  constexpr Vec2() = default;
  Vec2(double x, double y) : x_(x), y_(y) {
    if (!std::isfinite(x) || !std::isfinite(y)) {
      throw std::invalid_argument("Vec2: coordinates must be finite");
    }
  }

  double x() const { return x_; }
  double y() const { return y_; }

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x_ + b.x_, a.y_ + b.y_}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x_ - b.x_, a.y_ - b.y_}; }
  friend bool operator==(const Vec2&, const Vec2&) = default;

 private:
  double x_ = 0.0;
  double y_ = 0.0;
};

/// Box extents in grid units; width along x, depth along y, height is visual only.
class Footprint {
 public:
  Footprint(double width, double depth, double height)
      : width_(width), depth_(depth), height_(height) {
    if (!(width > 0.0) || !(depth > 0.0) || !(height > 0.0) || !std::isfinite(width) ||
        !std::isfinite(depth) || !std::isfinite(height)) {
      throw std::invalid_argument("Footprint: extents must be finite and > 0");
    }
  }

  double width() const { return width_; }
  double depth() const { return depth_; }
  double height() const { return height_; }

  friend bool operator==(const Footprint&, const Footprint&) = default;

 private:
  double width_;
  double depth_;
  double height_;
};

/// Closed axis-aligned rectangle. Degenerate (zero-extent) rectangles model wall segments.
struct Rect {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;

  static Rect centered(Vec2 center, double width, double depth) {
    return {center.x() - width / 2, center.y() - depth / 2, center.x() + width / 2,
            center.y() + depth / 2};
  }

  bool contains(Vec2 p) const {
    return p.x() >= min_x && p.x() <= max_x && p.y() >= min_y && p.y() <= max_y;
  }
  double center_x() const { return (min_x + max_x) / 2; }
  double center_y() const { return (min_y + max_y) / 2; }

  friend bool operator==(const Rect&, const Rect&) = default;
};

/// Euclidean distance between the closest points of two closed rectangles; 0 when they touch.
inline double rect_gap(const Rect& a, const Rect& b) {
  double dx = std::max({0.0, a.min_x - b.max_x, b.min_x - a.max_x});
  double dy = std::max({0.0, a.min_y - b.max_y, b.min_y - a.max_y});
  return std::hypot(dx, dy);
}

/// True when the interiors overlap (shared edges do not count).
inline bool rects_overlap(const Rect& a, const Rect& b) {
  return a.min_x < b.max_x && b.min_x < a.max_x && a.min_y < b.max_y && b.min_y < a.max_y;
}

}  // namespace layout_agent
