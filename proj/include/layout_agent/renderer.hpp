#pragma once

#include <string_view>

#include "layout_agent/config.hpp"
#include "layout_agent/image.hpp"
#include "layout_agent/scene.hpp"

namespace layout_agent {

enum class ViewKind { oblique_overview, topdown_at_cursor };

std::string_view to_string(ViewKind kind);

inline constexpr Rgb kGridColor{128, 128, 128};
inline constexpr Rgb kCursorColor{255, 0, 0};
inline constexpr Rgb kWallColor{139, 90, 43};
inline constexpr Rgb kGroundColor{214, 224, 200};
inline constexpr Rgb kOutsideColor{64, 64, 64};
inline constexpr Rgb kSkyColor{232, 238, 244};
inline constexpr Rgb kLabelColor{0, 0, 0};

struct ViewSpec {
  ViewKind kind = ViewKind::topdown_at_cursor;
  int width = 512;
  int height = 256;
  /// Top-down scale; the overview scale is chosen to fit the scene bounds.
  double pixels_per_unit = 16.0;
};

/// Maps ground-plane coordinates to continuous pixel coordinates in the top-down view.
/// Pixel (i, j) covers [i, i+1) x [j, j+1); y grows upward in the world, downward in the image.
struct TopdownProjection {
  double center_px_x;
  double center_px_y;
  double pixels_per_unit;
  Vec2 cursor;

  TopdownProjection(const ViewSpec& view, Vec2 cursor);
  double px_x(double world_x) const { return center_px_x + (world_x - cursor.x()) * pixels_per_unit; }
  double px_y(double world_y) const { return center_px_y - (world_y - cursor.y()) * pixels_per_unit; }
  /// Pixel column of the vertical grid line at world x (floor of the projection).
  int grid_column(double world_x) const;
  int grid_row(double world_y) const;
};

/// Cabinet projection: x to the right, y receding at 45 degrees with half scale, z up.
struct ObliqueProjection {
  double scale;
  double origin_px_x;
  double origin_px_y;
  Rect bounds;

  ObliqueProjection(const ViewSpec& view, const Scene& scene);
  double px_x(double x, double y, double z) const;
  double px_y(double x, double y, double z) const;
};

/// Deterministic raster of the scene; equal scenes give byte-identical images.
Image render_view(const Scene& scene, const ViewSpec& view);

struct RenderedViews {
  Image overview;
  Image topdown;
};

RenderedViews render_views(const Scene& scene, const AgentConfig& config);

/// Draws upper-cased `text` with the built-in 3x5 font; returns the advance in pixels.
int draw_label(Image& image, int x, int y, std::string_view text, Rgb color);
inline constexpr int kGlyphWidth = 3;
inline constexpr int kGlyphHeight = 5;
inline constexpr int kGlyphAdvance = 4;

}  // namespace layout_agent
