#include "layout_agent/backend.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "http_util.hpp"
#include "layout_agent/hash.hpp"

namespace layout_agent {

using nlohmann::json;

ScriptedBackend::ScriptedBackend(std::vector<std::string> responses)
    : responses_(std::move(responses)) {}

std::string ScriptedBackend::generate(const PromptBundle&, const GenerationParams& params) {
  if (next_ >= responses_.size()) {
    throw BackendError("scripted backend exhausted at step " + std::to_string(params.step_index) +
                       " after " + std::to_string(responses_.size()) + " responses");
  }
  return responses_[next_++];
}

std::vector<std::string> load_script(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open script " + path.string());
  std::vector<std::string> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    auto value = nlohmann::ordered_json::parse(line, nullptr, false);
    if (value.is_discarded()) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": not valid JSON");
    }
    out.push_back(value.is_string() ? value.get<std::string>() : value.dump());
  }
  return out;
}

namespace {

json entry_json(const CassetteEntry& e) {
  return {{"hash", e.hash},
          {"system_text", e.system_text},
          {"text_parts", e.text_parts},
          {"image_hashes", e.image_hashes},
          {"response", e.response}};
}

}  // namespace

Cassette::Cassette(std::filesystem::path path) : path_(std::move(path)) {
  std::ifstream in(path_);
  if (!in) return;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      json j = json::parse(line);
      CassetteEntry e{j.at("hash").get<std::string>(), j.value("system_text", ""),
                      j.value("text_parts", std::vector<std::string>{}),
                      j.value("image_hashes", std::vector<std::string>{}),
                      j.at("response").get<std::string>()};
      entries_.emplace(e.hash, std::move(e));
    } catch (const json::exception& ex) {
      throw std::runtime_error(path_.string() + ":" + std::to_string(lineno) + ": " + ex.what());
    }
  }
}

void Cassette::record(const PromptBundle& bundle, std::string_view response) {
  CassetteEntry e;
  e.hash = bundle.hash();
  std::lock_guard lock(mu_);
  if (entries_.contains(e.hash)) return;
  e.system_text = bundle.system_text;
  for (const auto& part : bundle.user_parts) {
    if (part.is_image()) {
      e.image_hashes.push_back(part.image_hash);
    } else {
      e.text_parts.push_back(part.text);
    }
  }
  e.response = std::string(response);

  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  std::ofstream out(path_, std::ios::app | std::ios::binary);
  out << entry_json(e).dump(-1, ' ', false, json::error_handler_t::replace) << "\n";
  out.flush();
  if (!out) throw std::runtime_error("cassette: cannot append to " + path_.string());
  entries_.emplace(e.hash, std::move(e));
}

std::optional<std::string> Cassette::lookup(std::string_view hash) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(hash);
  if (it == entries_.end()) return std::nullopt;
  return it->second.response;
}

std::size_t Cassette::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

ReplayBackend::ReplayBackend(std::shared_ptr<const Cassette> cassette)
    : cassette_(std::move(cassette)) {}

std::string ReplayBackend::generate(const PromptBundle& bundle, const GenerationParams& params) {
  const std::string hash = bundle.hash();
  if (auto hit = cassette_->lookup(hash)) return *hit;
  throw BackendError("replay miss at step " + std::to_string(params.step_index) + ": bundle " +
                     hash.substr(0, 12) + " not in cassette " + cassette_->path().string());
}

RecordingBackend::RecordingBackend(std::unique_ptr<Backend> inner, std::shared_ptr<Cassette> cassette)
    : inner_(std::move(inner)), cassette_(std::move(cassette)) {}

std::string RecordingBackend::generate(const PromptBundle& bundle, const GenerationParams& params) {
  std::string response = inner_->generate(bundle, params);
  cassette_->record(bundle, response);
  return response;
}

LiveHttpOptions LiveHttpOptions::from_environment() {
  LiveHttpOptions o;
  const char* endpoint = std::getenv("LAYOUT_AGENT_ENDPOINT");
  o.endpoint = endpoint != nullptr ? endpoint : "https://api.openai.com/v1/chat/completions";
  const char* key = std::getenv("LAYOUT_AGENT_API_KEY");
  if (key == nullptr) key = std::getenv("OPENAI_API_KEY");
  if (key == nullptr || *key == '\0') {
    throw BackendError("live backend: set LAYOUT_AGENT_API_KEY or OPENAI_API_KEY");
  }
  o.api_key = key;
  if (const char* model = std::getenv("LAYOUT_AGENT_MODEL")) o.model = model;
  return o;
}

LiveHttpBackend::LiveHttpBackend(LiveHttpOptions options) : options_(std::move(options)) {}

std::string LiveHttpBackend::request_body(const PromptBundle& bundle, double temperature) const {
  json content = json::array();
  for (const auto& part : bundle.user_parts) {
    if (part.is_image()) {
      auto png = encode_png(*part.image);
      content.push_back({{"type", "image_url"},
                         {"image_url", {{"url", "data:image/png;base64," + base64_encode(png)}}}});
    } else {
      content.push_back({{"type", "text"}, {"text", part.text}});
    }
  }
  json body{{"model", options_.model},
            {"temperature", temperature},
            {"max_tokens", options_.max_tokens},
            {"messages",
             {{{"role", "system"}, {"content", bundle.system_text}},
              {{"role", "user"}, {"content", std::move(content)}}}}};
  return body.dump(-1, ' ', false, json::error_handler_t::replace);
}

std::string LiveHttpBackend::parse_response(std::string_view body) {
  json doc = json::parse(body, nullptr, false);
  if (doc.is_discarded()) throw BackendError("live backend: response is not JSON");
  try {
    const json& content = doc.at("choices").at(0).at("message").at("content");
    if (content.is_string()) return content.get<std::string>();
    // Some servers return content as a list of text parts.
    std::string text;
    for (const auto& p : content) {
      if (p.value("type", "") == "text") text += p.value("text", "");
    }
    return text;
  } catch (const json::exception&) {
    throw BackendError("live backend: response has no choices[0].message.content");
  }
}

std::string LiveHttpBackend::generate(const PromptBundle& bundle, const GenerationParams& params) {
  const std::string body = request_body(bundle, params.temperature);
  detail::SplitUrl url;
  try {
    url = detail::split_url(options_.endpoint);
  } catch (const std::invalid_argument& e) {
    throw BackendError(std::string("live backend: ") + e.what());
  }

  std::string last_error;
  auto backoff = options_.initial_backoff;
  int made = 0;
  for (int attempt = 1; attempt <= options_.attempts; ++attempt) {
    made = attempt;
    httplib::Client client(url.origin);
    client.set_connection_timeout(options_.timeout);
    client.set_read_timeout(options_.timeout);
    client.set_write_timeout(options_.timeout);
    client.set_bearer_token_auth(options_.api_key);
    auto res = client.Post(url.path, body, "application/json");
    if (res && res->status == 200) return parse_response(res->body);

    if (!res) {
      last_error = httplib::to_string(res.error());
    } else {
      last_error = "HTTP " + std::to_string(res->status);
      // Client errors other than rate limiting will not improve on retry.
      if (res->status >= 400 && res->status < 500 && res->status != 429) break;
    }
    if (attempt < options_.attempts) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  throw BackendError("live backend: step " + std::to_string(params.step_index) + " failed after " +
                     std::to_string(made) + " attempt(s): " + last_error);
}

}  // namespace layout_agent
