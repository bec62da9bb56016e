#include "layout_agent/renderer.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <numbers>

namespace layout_agent {

std::string_view to_string(ViewKind kind) {
  return kind == ViewKind::oblique_overview ? "overview" : "topdown";
}

namespace {

// 3x5 glyphs, one string per row, '#' = ink.
struct Glyph {
  char c;
  std::array<const char*, 5> rows;
};

constexpr Glyph kFont[] = {
    {'A', {".#.", "#.#", "###", "#.#", "#.#"}}, {'B', {"##.", "#.#", "##.", "#.#", "##."}},
    {'C', {".##", "#..", "#..", "#..", ".##"}}, {'D', {"##.", "#.#", "#.#", "#.#", "##."}},
    {'E', {"###", "#..", "##.", "#..", "###"}}, {'F', {"###", "#..", "##.", "#..", "#.."}},
    {'G', {".##", "#..", "#.#", "#.#", ".##"}}, {'H', {"#.#", "#.#", "###", "#.#", "#.#"}},
    {'I', {"###", ".#.", ".#.", ".#.", "###"}}, {'J', {"..#", "..#", "..#", "#.#", ".#."}},
    {'K', {"#.#", "#.#", "##.", "#.#", "#.#"}}, {'L', {"#..", "#..", "#..", "#..", "###"}},
    {'M', {"#.#", "###", "###", "#.#", "#.#"}}, {'N', {"##.", "#.#", "#.#", "#.#", "#.#"}},
    {'O', {".#.", "#.#", "#.#", "#.#", ".#."}}, {'P', {"##.", "#.#", "##.", "#..", "#.."}},
    {'Q', {".#.", "#.#", "#.#", "##.", ".##"}}, {'R', {"##.", "#.#", "##.", "#.#", "#.#"}},
    {'S', {".##", "#..", ".#.", "..#", "##."}}, {'T', {"###", ".#.", ".#.", ".#.", ".#."}},
    {'U', {"#.#", "#.#", "#.#", "#.#", "###"}}, {'V', {"#.#", "#.#", "#.#", "#.#", ".#."}},
    {'W', {"#.#", "#.#", "###", "###", "#.#"}}, {'X', {"#.#", "#.#", ".#.", "#.#", "#.#"}},
    {'Y', {"#.#", "#.#", ".#.", ".#.", ".#."}}, {'Z', {"###", "..#", ".#.", "#..", "###"}},
    {'0', {"###", "#.#", "#.#", "#.#", "###"}}, {'1', {".#.", "##.", ".#.", ".#.", "###"}},
    {'2', {"##.", "..#", ".#.", "#..", "###"}}, {'3', {"##.", "..#", ".#.", "..#", "##."}},
    {'4', {"#.#", "#.#", "###", "..#", "..#"}}, {'5', {"###", "#..", "##.", "..#", "##."}},
    {'6', {".##", "#..", "###", "#.#", "###"}}, {'7', {"###", "..#", ".#.", ".#.", ".#."}},
    {'8', {"###", "#.#", "###", "#.#", "###"}}, {'9', {"###", "#.#", "###", "..#", "##."}},
    {'-', {"...", "...", "###", "...", "..."}}, {'.', {"...", "...", "...", "...", ".#."}},
    {'_', {"...", "...", "...", "...", "###"}}, {'?', {"##.", "..#", ".#.", "...", ".#."}},
};

const Glyph* find_glyph(char c) {
  for (const auto& g : kFont) {
    if (g.c == c) return &g;
  }
  return nullptr;
}

Rgb scaled(Rgb c, double f) {
  auto ch = [f](std::uint8_t v) {
    return static_cast<std::uint8_t>(std::clamp(static_cast<int>(v * f), 0, 255));
  };
  return {ch(c.r), ch(c.g), ch(c.b)};
}

// Fills pixels whose centers lie inside the closed continuous rectangle.
void fill_px_rect(Image& img, double x0, double y0, double x1, double y1, Rgb c) {
  int i0 = std::max(0, static_cast<int>(std::ceil(x0 - 0.5)));
  int i1 = std::min(img.width() - 1, static_cast<int>(std::floor(x1 - 0.5)));
  int j0 = std::max(0, static_cast<int>(std::ceil(y0 - 0.5)));
  int j1 = std::min(img.height() - 1, static_cast<int>(std::floor(y1 - 0.5)));
  for (int j = j0; j <= j1; ++j) {
    for (int i = i0; i <= i1; ++i) img.set(i, j, c);
  }
}

void fill_disc(Image& img, double cx, double cy, double radius, Rgb c) {
  int i0 = static_cast<int>(std::floor(cx - radius));
  int i1 = static_cast<int>(std::ceil(cx + radius));
  int j0 = static_cast<int>(std::floor(cy - radius));
  int j1 = static_cast<int>(std::ceil(cy + radius));
  for (int j = j0; j <= j1; ++j) {
    for (int i = i0; i <= i1; ++i) {
      double dx = i + 0.5 - cx;
      double dy = j + 0.5 - cy;
      if (dx * dx + dy * dy <= radius * radius) img.set(i, j, c);
    }
  }
}

struct Pt {
  double x;
  double y;
};

// Convex polygon, either winding; pixel centers on the edge are inside.
void fill_convex(Image& img, const std::array<Pt, 4>& poly, Rgb c) {
  double min_x = poly[0].x, max_x = poly[0].x, min_y = poly[0].y, max_y = poly[0].y;
  for (const auto& p : poly) {
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }
  int i0 = std::max(0, static_cast<int>(std::floor(min_x)));
  int i1 = std::min(img.width() - 1, static_cast<int>(std::ceil(max_x)));
  int j0 = std::max(0, static_cast<int>(std::floor(min_y)));
  int j1 = std::min(img.height() - 1, static_cast<int>(std::ceil(max_y)));
  for (int j = j0; j <= j1; ++j) {
    for (int i = i0; i <= i1; ++i) {
      double px = i + 0.5, py = j + 0.5;
      bool pos = false, neg = false;
      for (std::size_t k = 0; k < poly.size(); ++k) {
        const Pt& a = poly[k];
        const Pt& b = poly[(k + 1) % poly.size()];
        double cross = (b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x);
        if (cross > 1e-9) pos = true;
        if (cross < -1e-9) neg = true;
      }
      if (!(pos && neg)) img.set(i, j, c);
    }
  }
}

void draw_line(Image& img, Pt a, Pt b, Rgb c) {
  int x0 = static_cast<int>(std::floor(a.x)), y0 = static_cast<int>(std::floor(a.y));
  int x1 = static_cast<int>(std::floor(b.x)), y1 = static_cast<int>(std::floor(b.y));
  int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
  int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  for (;;) {
    img.set(x0, y0, c);
    if (x0 == x1 && y0 == y1) break;
    int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

// Label clipped to `max_width` pixels; nothing drawn if not even one glyph fits.
void draw_fitted_label(Image& img, int x, int y, std::string_view text, int max_width) {
  int chars = (max_width + 1) / kGlyphAdvance;
  if (chars <= 0) return;
  draw_label(img, x, y, text.substr(0, static_cast<std::size_t>(chars)), kLabelColor);
}

constexpr double kWallHeight = 0.3;
constexpr double kWallThickness = 0.15;
constexpr double kCursorRadiusUnits = kCursorNominalSize / 2;

Image render_topdown(const Scene& scene, const ViewSpec& view) {
  Image img(view.width, view.height, kOutsideColor);
  TopdownProjection proj(view, scene.cursor());
  const Rect& b = scene.bounds();

  const double gx0 = proj.px_x(b.min_x), gx1 = proj.px_x(b.max_x);
  const double gy0 = proj.px_y(b.max_y), gy1 = proj.px_y(b.min_y);
  fill_px_rect(img, gx0, gy0, gx1, gy1, kGroundColor);

  const double gi = scene.grid_interval();
  const int row_lo = std::max(0, static_cast<int>(std::floor(gy0)));
  const int row_hi = std::min(view.height - 1, static_cast<int>(std::floor(gy1)));
  const int col_lo = std::max(0, static_cast<int>(std::floor(gx0)));
  const int col_hi = std::min(view.width - 1, static_cast<int>(std::floor(gx1)));
  for (long k = static_cast<long>(std::ceil(b.min_x / gi)); k * gi <= b.max_x; ++k) {
    int col = proj.grid_column(k * gi);
    for (int row = row_lo; row <= row_hi; ++row) img.set(col, row, kGridColor);
  }
  for (long k = static_cast<long>(std::ceil(b.min_y / gi)); k * gi <= b.max_y; ++k) {
    int row = proj.grid_row(k * gi);
    for (int col = col_lo; col <= col_hi; ++col) img.set(col, row, kGridColor);
  }

  for (const auto& wall : scene.walls()) {
    Rect r = wall.rect();
    fill_px_rect(img, proj.px_x(r.min_x) - 1.5, proj.px_y(r.max_y) - 1.5, proj.px_x(r.max_x) + 1.5,
                 proj.px_y(r.min_y) + 1.5, kWallColor);
  }

  for (const auto& obj : scene.objects()) {
    Rect r = obj.rect();
    double x0 = proj.px_x(r.min_x), x1 = proj.px_x(r.max_x);
    double y0 = proj.px_y(r.max_y), y1 = proj.px_y(r.min_y);
    Rgb color = color_for_key(obj.asset_ref);
    fill_px_rect(img, x0, y0, x1, y1, scaled(color, 0.6));
    fill_px_rect(img, x0 + 1, y0 + 1, x1 - 1, y1 - 1, color);
    draw_fitted_label(img, static_cast<int>(std::ceil(x0)) + 2, static_cast<int>(std::ceil(y0)) + 2,
                      obj.name, static_cast<int>(x1 - x0) - 4);
  }

  fill_disc(img, proj.px_x(scene.cursor().x()), proj.px_y(scene.cursor().y()),
            std::max(3.0, kCursorRadiusUnits * view.pixels_per_unit), kCursorColor);
  return img;
}

struct Box {
  Rect rect;
  double height;
  Rgb color;
  std::string label;
};

Image render_overview(const Scene& scene, const ViewSpec& view) {
  Image img(view.width, view.height, kSkyColor);
  ObliqueProjection proj(view, scene);
  const Rect& b = scene.bounds();
  auto at = [&](double x, double y, double z) { return Pt{proj.px_x(x, y, z), proj.px_y(x, y, z)}; };

  fill_convex(img, {at(b.min_x, b.min_y, 0), at(b.max_x, b.min_y, 0), at(b.max_x, b.max_y, 0),
                    at(b.min_x, b.max_y, 0)},
              kGroundColor);
  const double gi = scene.grid_interval();
  for (long k = static_cast<long>(std::ceil(b.min_x / gi)); k * gi <= b.max_x; ++k) {
    draw_line(img, at(k * gi, b.min_y, 0), at(k * gi, b.max_y, 0), kGridColor);
  }
  for (long k = static_cast<long>(std::ceil(b.min_y / gi)); k * gi <= b.max_y; ++k) {
    draw_line(img, at(b.min_x, k * gi, 0), at(b.max_x, k * gi, 0), kGridColor);
  }

  std::vector<Box> boxes;
  for (const auto& wall : scene.walls()) {
    Rect r = wall.rect();
    r.min_x -= kWallThickness / 2;
    r.max_x += kWallThickness / 2;
    r.min_y -= kWallThickness / 2;
    r.max_y += kWallThickness / 2;
    boxes.push_back({r, kWallHeight, kWallColor, ""});
  }
  for (const auto& obj : scene.objects()) {
    boxes.push_back({obj.rect(), obj.footprint.height(), color_for_key(obj.asset_ref), obj.name});
  }
  // Painter's order: far rows first, then left to right.
  std::stable_sort(boxes.begin(), boxes.end(), [](const Box& l, const Box& r) {
    if (l.rect.min_y != r.rect.min_y) return l.rect.min_y > r.rect.min_y;
    return l.rect.min_x < r.rect.min_x;
  });
  for (const auto& box : boxes) {
    const Rect& r = box.rect;
    const double h = box.height;
    fill_convex(img, {at(r.max_x, r.min_y, 0), at(r.max_x, r.max_y, 0), at(r.max_x, r.max_y, h),
                      at(r.max_x, r.min_y, h)},
                scaled(box.color, 0.7));
    fill_convex(img, {at(r.min_x, r.min_y, h), at(r.max_x, r.min_y, h), at(r.max_x, r.max_y, h),
                      at(r.min_x, r.max_y, h)},
                scaled(box.color, 1.15));
    Pt lo = at(r.min_x, r.min_y, 0), hi = at(r.max_x, r.min_y, h);
    fill_convex(img, {lo, Pt{hi.x, lo.y}, hi, Pt{lo.x, hi.y}}, box.color);
    if (!box.label.empty() && lo.y - hi.y >= kGlyphHeight + 2) {
      draw_fitted_label(img, static_cast<int>(std::ceil(lo.x)) + 1,
                        static_cast<int>(std::ceil(hi.y)) + 1, box.label,
                        static_cast<int>(hi.x - lo.x) - 2);
    }
  }

  Pt c = at(scene.cursor().x(), scene.cursor().y(), 0);
  fill_disc(img, c.x, c.y, std::max(3.0, kCursorRadiusUnits * proj.scale), kCursorColor);
  return img;
}

}  // namespace

TopdownProjection::TopdownProjection(const ViewSpec& view, Vec2 cursor_pos)
    : center_px_x(view.width / 2.0),
      center_px_y(view.height / 2.0),
      pixels_per_unit(view.pixels_per_unit),
      cursor(cursor_pos) {}

int TopdownProjection::grid_column(double world_x) const {
  return static_cast<int>(std::floor(px_x(world_x)));
}

int TopdownProjection::grid_row(double world_y) const {
  return static_cast<int>(std::floor(px_y(world_y)));
}

ObliqueProjection::ObliqueProjection(const ViewSpec& view, const Scene& scene)
    : bounds(scene.bounds()) {
  constexpr double kMargin = 8.0;
  const double recede = 0.5 * std::numbers::sqrt2 / 2;  // half scale times cos/sin 45
  double top = 3.0;
  for (const auto& o : scene.objects()) top = std::max(top, o.footprint.height());
  const double depth = bounds.max_y - bounds.min_y;
  const double u_extent = (bounds.max_x - bounds.min_x) + recede * depth;
  const double v_extent = recede * depth + top;
  scale = std::min((view.width - 2 * kMargin) / u_extent, (view.height - 2 * kMargin) / v_extent);
  origin_px_x = (view.width - scale * u_extent) / 2;
  origin_px_y = view.height - (view.height - scale * v_extent) / 2;
}

double ObliqueProjection::px_x(double x, double y, double /*z*/) const {
  const double recede = 0.5 * std::numbers::sqrt2 / 2;
  return origin_px_x + scale * ((x - bounds.min_x) + recede * (y - bounds.min_y));
}

double ObliqueProjection::px_y(double /*x*/, double y, double z) const {
  const double recede = 0.5 * std::numbers::sqrt2 / 2;
  return origin_px_y - scale * (z + recede * (y - bounds.min_y));
}

int draw_label(Image& image, int x, int y, std::string_view text, Rgb color) {
  int cx = x;
  for (char raw : text) {
    char c = static_cast<char>(std::toupper(static_cast<unsigned char>(raw)));
    if (c != ' ') {
      const Glyph* g = find_glyph(c);
      if (g == nullptr) g = find_glyph('?');
      for (int row = 0; row < kGlyphHeight; ++row) {
        for (int col = 0; col < kGlyphWidth; ++col) {
          if (g->rows[row][col] == '#') image.set(cx + col, y + row, color);
        }
      }
    }
    cx += kGlyphAdvance;
  }
  return cx - x;
}

Image render_view(const Scene& scene, const ViewSpec& view) {
  return view.kind == ViewKind::topdown_at_cursor ? render_topdown(scene, view)
                                                  : render_overview(scene, view);
}

RenderedViews render_views(const Scene& scene, const AgentConfig& config) {
  ViewSpec overview{ViewKind::oblique_overview, config.image_width, config.image_height,
                    config.pixels_per_unit};
  ViewSpec topdown{ViewKind::topdown_at_cursor, config.image_width, config.image_height,
                   config.pixels_per_unit};
  return {render_view(scene, overview), render_view(scene, topdown)};
}

}  // namespace layout_agent
