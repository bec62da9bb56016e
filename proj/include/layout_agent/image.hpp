#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "layout_agent/object_factory.hpp"

namespace layout_agent {

/// Packed 8-bit RGB raster, row-major, top row first.
class Image {
 public:
  Image(int width, int height, Rgb fill = {});

  int width() const { return width_; }
  int height() const { return height_; }
  const std::vector<std::uint8_t>& pixels() const { return rgb_; }

  bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }
  Rgb at(int x, int y) const;
  void set(int x, int y, Rgb c);  // ignores out-of-range coordinates

  /// SHA-256 over dimensions and pixels.
  std::string content_hash() const;

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> rgb_;
};

std::vector<std::uint8_t> encode_png(const Image& image);
Image decode_png(const std::vector<std::uint8_t>& bytes);
void write_png(const Image& image, const std::filesystem::path& path);
Image read_png(const std::filesystem::path& path);

}  // namespace layout_agent
