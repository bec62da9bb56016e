#include "layout_agent/object_factory.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "http_util.hpp"
#include "layout_agent/hash.hpp"

namespace layout_agent {

using nlohmann::json;

std::string normalize_object_name(std::string_view name) {
  std::string out;
  bool pending_space = false;
  for (unsigned char c : name) {
    if (std::isspace(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

Footprint procedural_footprint(std::string_view key) {
  struct Entry {
    std::string_view keyword;
    double width, depth, height;
  };
  // First match wins.
  static constexpr Entry kTable[] = {
      {"tree", 1.0, 1.0, 3.0},      {"house", 4.0, 4.0, 3.0},    {"bed", 2.0, 1.0, 0.5},
      {"desk", 1.0, 0.5, 1.0},      {"bookshelf", 1.0, 0.5, 1.0},
  };
  for (const auto& e : kTable) {
    if (key.find(e.keyword) != std::string_view::npos) return {e.width, e.depth, e.height};
  }
  return {1.0, 1.0, 1.0};
}

Rgb color_for_key(std::string_view key) {
  std::uint64_t h = fnv1a64(key);
  // Keep channels in a mid range so labels and outlines stay readable.
  auto channel = [&](int shift) {
    return static_cast<std::uint8_t>(48 + ((h >> shift) & 0xff) * 160 / 255);
  };
  return {channel(0), channel(8), channel(16)};
}

HttpMeshGenerator::HttpMeshGenerator(std::string url, double timeout_seconds)
    : url_(std::move(url)), timeout_seconds_(timeout_seconds) {}

ExternalGenerator::Mesh HttpMeshGenerator::generate(std::string_view prompt) {
  auto [origin, path] = detail::split_url(url_);
  httplib::Client client(origin);
  auto timeout = std::chrono::duration<double>(timeout_seconds_);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  httplib::Headers headers{{"Accept", "model/gltf-binary, model/obj, application/octet-stream"}};
  auto res = client.Post(path, headers, json{{"prompt", std::string(prompt)}}.dump(),
                         "application/json");
  if (!res) throw std::runtime_error("mesh generator: " + httplib::to_string(res.error()));
  if (res->status != 200) {
    throw std::runtime_error("mesh generator: HTTP " + std::to_string(res->status));
  }
  if (res->body.empty()) throw std::runtime_error("mesh generator: empty body");
  std::string type = res->get_header_value("Content-Type");
  std::string ext = "bin";
  if (type.starts_with("model/gltf-binary")) {
    ext = "glb";
  } else if (type.starts_with("model/gltf+json")) {
    ext = "gltf";
  } else if (type.starts_with("model/obj")) {
    ext = "obj";
  } else if (type.starts_with("model/ply") || type.starts_with("application/ply")) {
    ext = "ply";
  }
  return {std::move(res->body), ext};
}

ObjectFactory::ObjectFactory() = default;

ObjectFactory::ObjectFactory(std::filesystem::path manifest_path)
    : manifest_path_(std::move(manifest_path)) {
  load_manifest();
}

void ObjectFactory::attach_external_generator(std::shared_ptr<ExternalGenerator> generator) {
  std::lock_guard lock(mu_);
  generator_ = std::move(generator);
}

Asset ObjectFactory::get_or_create(std::string_view name, std::vector<std::string>* warnings) {
  std::string key = normalize_object_name(name);
  if (key.empty()) throw std::invalid_argument("object name must be non-empty");

  // One lock across lookup and creation keeps creation single-shot per key.
  std::lock_guard lock(mu_);
  if (auto it = assets_.find(key); it != assets_.end()) return it->second;

  Asset asset{key, procedural_footprint(key), color_for_key(key), std::nullopt};
  if (generator_) {
    try {
      ExternalGenerator::Mesh mesh = generator_->generate(key);
      std::filesystem::path dir = manifest_path_
                                      ? manifest_path_->parent_path() / "meshes"
                                      : std::filesystem::temp_directory_path() / "layout_agent_meshes";
      std::filesystem::create_directories(dir);
      std::filesystem::path file = dir / (sha256_hex(key).substr(0, 16) + "." + mesh.extension);
      std::ofstream out(file, std::ios::binary | std::ios::trunc);
      out.write(mesh.bytes.data(), static_cast<std::streamsize>(mesh.bytes.size()));
      if (!out) throw std::runtime_error("cannot write " + file.string());
      asset.mesh_ref = file.string();
    } catch (const std::exception& e) {
      if (warnings != nullptr) {
        warnings->push_back("object generator failed for '" + key + "', using procedural asset: " +
                            e.what());
      }
    }
  }
  assets_.emplace(key, asset);
  if (manifest_path_) save_manifest();
  return asset;
}

std::optional<Asset> ObjectFactory::find(std::string_view key) const {
  std::lock_guard lock(mu_);
  auto it = assets_.find(key);
  if (it == assets_.end()) return std::nullopt;
  return it->second;
}

std::size_t ObjectFactory::size() const {
  std::lock_guard lock(mu_);
  return assets_.size();
}

void ObjectFactory::load_manifest() {
  if (!std::filesystem::exists(*manifest_path_)) return;
  std::ifstream in(*manifest_path_);
  json doc = json::parse(in);
  for (const auto& [key, rec] : doc.at("assets").items()) {
    const json& fp = rec.at("footprint");
    const json& c = rec.at("color");
    Asset asset{key,
                {fp.at("width").get<double>(), fp.at("depth").get<double>(),
                 fp.at("height").get<double>()},
                {c.at(0).get<std::uint8_t>(), c.at(1).get<std::uint8_t>(), c.at(2).get<std::uint8_t>()},
                std::nullopt};
    if (rec.contains("mesh_ref") && rec["mesh_ref"].is_string()) {
      asset.mesh_ref = rec["mesh_ref"].get<std::string>();
    }
    assets_.emplace(key, std::move(asset));
  }
}

void ObjectFactory::save_manifest() const {
  json assets = json::object();
  for (const auto& [key, a] : assets_) {
    assets[key] = {{"footprint",
                    {{"width", a.footprint.width()},
                     {"depth", a.footprint.depth()},
                     {"height", a.footprint.height()}}},
                   {"color", {a.color.r, a.color.g, a.color.b}},
                   {"mesh_ref", a.mesh_ref ? json(*a.mesh_ref) : json(nullptr)}};
  }
  json doc{{"version", 1}, {"assets", std::move(assets)}};
  if (manifest_path_->has_parent_path()) {
    std::filesystem::create_directories(manifest_path_->parent_path());
  }
  auto tmp = *manifest_path_;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << doc.dump(2) << "\n";
    if (!out) throw std::runtime_error("cannot write asset manifest " + tmp.string());
  }
  std::filesystem::rename(tmp, *manifest_path_);
}

}  // namespace layout_agent
