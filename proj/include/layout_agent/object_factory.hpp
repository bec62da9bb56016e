#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "layout_agent/geometry.hpp"

namespace layout_agent {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

struct Asset {
  std::string key;
  Footprint footprint;
  Rgb color;
  std::optional<std::string> mesh_ref;

  friend bool operator==(const Asset&, const Asset&) = default;
};

/// Lowercase, trimmed, internal whitespace runs collapsed to one space.
std::string normalize_object_name(std::string_view name);

/// Keyword-table footprint used when no external mesh supplies one.
Footprint procedural_footprint(std::string_view key);
/// Stable color derived from the key.
Rgb color_for_key(std::string_view key);

/// Text-to-3D service reachable over HTTP.
class ExternalGenerator {
 public:
  struct Mesh {
    std::string bytes;
    std::string extension;  // without dot, e.g. "glb"
  };
  virtual ~ExternalGenerator() = default;
  /// Throws on any transport or service failure.
  virtual Mesh generate(std::string_view prompt) = 0;
};

/// POSTs {"prompt": "..."} to `url` and stores the response body opaquely.
class HttpMeshGenerator final : public ExternalGenerator {
 public:
  explicit HttpMeshGenerator(std::string url, double timeout_seconds = 60.0);
  Mesh generate(std::string_view prompt) override;

 private:
  std::string url_;
  double timeout_seconds_;
};

/// Maps object names to assets. The first request for a key creates the asset; later requests
/// return the stored one. Thread-safe.
class ObjectFactory {
 public:
  /// In-memory cache only.
  ObjectFactory();
  /// Cache persisted to `manifest_path` (loaded if present, rewritten on every new asset).
  /// Meshes from an external generator are stored beside it in `meshes/`.
  explicit ObjectFactory(std::filesystem::path manifest_path);

  void attach_external_generator(std::shared_ptr<ExternalGenerator> generator);

  /// Throws std::invalid_argument for an empty (or all-whitespace) name. Generator failures
  /// fall back to the procedural asset and are reported through `warnings`.
  Asset get_or_create(std::string_view name, std::vector<std::string>* warnings = nullptr);

  std::optional<Asset> find(std::string_view key) const;
  std::size_t size() const;

 private:
  void load_manifest();
  void save_manifest() const;

  mutable std::mutex mu_;
  std::map<std::string, Asset, std::less<>> assets_;
  std::optional<std::filesystem::path> manifest_path_;
  std::shared_ptr<ExternalGenerator> generator_;
};

}  // namespace layout_agent
