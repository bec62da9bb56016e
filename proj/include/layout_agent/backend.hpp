#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "layout_agent/prompt.hpp"

namespace layout_agent {

enum class BackendKind { live_http, scripted, replay };

struct GenerationParams {
  double temperature = 0.1;
  /// Step index within the episode, for diagnostics.
  int step_index = 0;
};

/// Raised for any failure to obtain model text; terminates the episode as backend_failure.
struct BackendError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Text-generation backend: prompt bundle in, raw model text out.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string generate(const PromptBundle& bundle, const GenerationParams& params) = 0;
};

/// Emits canned responses in order; running out is an error.
class ScriptedBackend final : public Backend {
 public:
  explicit ScriptedBackend(std::vector<std::string> responses);
  std::string generate(const PromptBundle& bundle, const GenerationParams& params) override;
  std::size_t calls() const { return next_; }
  std::size_t remaining() const { return responses_.size() - next_; }

 private:
  std::vector<std::string> responses_;
  std::size_t next_ = 0;
};

/// Reads a script file: one JSON value per line. A string line is the raw response; any other
/// value is emitted as its compact JSON text. Blank lines and lines starting with '#' are skipped.
std::vector<std::string> load_script(const std::filesystem::path& path);

struct CassetteEntry {
  std::string hash;
  std::string system_text;
  std::vector<std::string> text_parts;
  std::vector<std::string> image_hashes;
  std::string response;
};

/// Line-delimited JSON log of prompt -> response pairs keyed by bundle hash. Thread-safe.
class Cassette {
 public:
  /// Loads existing entries if the file exists.
  explicit Cassette(std::filesystem::path path);

  /// Appends an entry unless one with the same hash exists. Throws on I/O failure.
  void record(const PromptBundle& bundle, std::string_view response);
  std::optional<std::string> lookup(std::string_view hash) const;
  std::size_t size() const;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  mutable std::mutex mu_;
  std::map<std::string, CassetteEntry, std::less<>> entries_;
};

/// Answers from a cassette; a bundle whose hash is absent is a hard error naming the step.
class ReplayBackend final : public Backend {
 public:
  explicit ReplayBackend(std::shared_ptr<const Cassette> cassette);
  std::string generate(const PromptBundle& bundle, const GenerationParams& params) override;

 private:
  std::shared_ptr<const Cassette> cassette_;
};

/// Forwards to another backend and records every exchange.
class RecordingBackend final : public Backend {
 public:
  RecordingBackend(std::unique_ptr<Backend> inner, std::shared_ptr<Cassette> cassette);
  std::string generate(const PromptBundle& bundle, const GenerationParams& params) override;

 private:
  std::unique_ptr<Backend> inner_;
  std::shared_ptr<Cassette> cassette_;
};

struct LiveHttpOptions {
  /// Full chat-completions URL, e.g. https://api.openai.com/v1/chat/completions.
  std::string endpoint;
  std::string api_key;
  std::string model = "gpt-4-vision-preview";
  int max_tokens = 1024;
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};
  std::chrono::seconds timeout{120};

  /// Reads LAYOUT_AGENT_ENDPOINT (default OpenAI), LAYOUT_AGENT_API_KEY (falls back to
  /// OPENAI_API_KEY) and LAYOUT_AGENT_MODEL. Throws BackendError without a key.
  static LiveHttpOptions from_environment();
};

/// Multimodal chat-completions client. Images are sent inline as base64 PNG data URLs.
class LiveHttpBackend final : public Backend {
 public:
  explicit LiveHttpBackend(LiveHttpOptions options);
  std::string generate(const PromptBundle& bundle, const GenerationParams& params) override;

  /// The request body for a bundle (exposed for wire-shape tests).
  std::string request_body(const PromptBundle& bundle, double temperature) const;
  /// Extracts choices[0].message.content; throws BackendError on an unexpected shape.
  static std::string parse_response(std::string_view body);

 private:
  LiveHttpOptions options_;
};

}  // namespace layout_agent
