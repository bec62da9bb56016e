#pragma once

// HTTP service exposing interactive episodes under /api/v1/.
//
//   POST /api/v1/sessions                         create ({"fixture": name} | {"scene": {...}} | {})
//   GET  /api/v1/sessions/{id}                    status summary
//   POST /api/v1/sessions/{id}/instructions       start an episode ({"instruction", "preset"?})
//   GET  /api/v1/sessions/{id}/events?since=N     server-sent events (add &until_terminal=1 to
//                                                 close after the next terminal event)
//   GET  /api/v1/sessions/{id}/events.json?since=N&wait_ms=M   long-poll fallback
//   GET  /api/v1/sessions/{id}/scene              current scene (scene file format)
//   GET  /api/v1/sessions/{id}/transcript         all episode transcripts, JSONL
//   POST /api/v1/sessions/{id}/cancel             stop the running episode
//   GET  /api/v1/sessions/{id}/episodes/{k}/views/{file}.png
//
// Event objects carry "type" (episode_started | step | terminal) and a per-session "seq".

#include <filesystem>
#include <functional>
#include <memory>
#include <string>

#include "layout_agent/backend.hpp"
#include "layout_agent/config.hpp"
#include "layout_agent/object_factory.hpp"

namespace layout_agent {

enum class SessionStatus { idle, running, awaiting_instruction };

std::string_view to_string(SessionStatus status);

struct ServiceOptions {
  /// Called once per episode.
  std::function<std::unique_ptr<Backend>(const std::string& session_id, int episode,
                                         const std::string& instruction)>
      backends;
  std::shared_ptr<ObjectFactory> factory;
  /// Named fixtures resolve to <fixtures_dir>/<name>.json.
  std::filesystem::path fixtures_dir;
  /// Transcripts and view PNGs live under <data_dir>/sessions/<id>/episode<k>/.
  std::filesystem::path data_dir;
  AgentConfig default_config = AgentConfig{};
};

class Service {
 public:
  explicit Service(ServiceOptions options);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Blocks serving until stop().
  bool listen(const std::string& host, int port);
  /// Binds an ephemeral port and returns it; follow with listen_after_bind().
  int bind_to_any_port(const std::string& host);
  bool listen_after_bind();
  void wait_until_ready() const;
  /// Cancels running episodes and stops the server.
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace layout_agent
