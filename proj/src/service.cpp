#include "layout_agent/service.hpp"

#include <atomic>
#include <condition_variable>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "layout_agent/agent.hpp"
#include "layout_agent/scene.hpp"

namespace layout_agent {

using nlohmann::json;

std::string_view to_string(SessionStatus status) {
  switch (status) {
    case SessionStatus::idle: return "idle";
    case SessionStatus::running: return "running";
    case SessionStatus::awaiting_instruction: return "awaiting_instruction";
  }
  return "unknown";
}

namespace {

constexpr std::string_view kApi = "/api/v1";

json scene_json(const Scene& scene) { return json::parse(serialize_scene(scene)); }

json action_json(const std::optional<Action>& a) {
  return a ? json::parse(action_to_json(*a)) : json(nullptr);
}

std::string dump(const json& j) { return j.dump(-1, ' ', false, json::error_handler_t::replace); }

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(dump(body), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, json{{"error", message}});
}

struct Session {
  explicit Session(std::string session_id, Scene initial)
      : id(std::move(session_id)), scene(std::move(initial)) {}

  const std::string id;
  std::mutex mu;
  std::condition_variable cv;
  Scene scene;
  SessionStatus status = SessionStatus::idle;
  int episodes = 0;
  std::vector<json> events;
  /// JSONL of completed episodes.
  std::string transcripts;
  Transcript current;
  std::optional<EpisodeResult> last;
  std::atomic<bool> cancel{false};
  bool closed = false;
  std::thread worker;

  void push_event(json event) {
    event["seq"] = events.size();
    event["session_id"] = id;
    events.push_back(std::move(event));
    cv.notify_all();
  }
};

}  // namespace

struct Service::Impl {
  explicit Impl(ServiceOptions opts) : options(std::move(opts)) {
    if (!options.factory) options.factory = std::make_shared<ObjectFactory>();
    if (options.data_dir.empty()) {
      std::random_device rd;
      options.data_dir = std::filesystem::temp_directory_path() /
                         ("layout_agent_service_" + std::to_string(rd()));
    }
    routes();
  }

  ~Impl() { shutdown(); }

  ServiceOptions options;
  httplib::Server server;
  std::mutex sessions_mu;
  std::map<std::string, std::shared_ptr<Session>> sessions;
  std::mt19937_64 rng{std::random_device{}()};
  bool stopped = false;

  std::shared_ptr<Session> find(const std::string& id) {
    std::lock_guard lock(sessions_mu);
    auto it = sessions.find(id);
    return it == sessions.end() ? nullptr : it->second;
  }

  std::string new_session_id() {
    std::lock_guard lock(sessions_mu);
    for (;;) {
      std::ostringstream ss;
      ss << std::hex << rng();
      if (!sessions.contains(ss.str())) return ss.str();
    }
  }

  std::string view_url(const std::string& session, int episode, int step, std::string_view view) {
    return std::string(kApi) + "/sessions/" + session + "/episodes/" + std::to_string(episode) +
           "/views/step" + std::to_string(step) + "_" + std::string(view) + ".png";
  }

  std::filesystem::path episode_dir(const std::string& session, int episode) const {
    return options.data_dir / "sessions" / session / ("episode" + std::to_string(episode));
  }

  void shutdown() {
    std::vector<std::shared_ptr<Session>> all;
    {
      std::lock_guard lock(sessions_mu);
      if (stopped) return;
      stopped = true;
      for (auto& [_, s] : sessions) all.push_back(s);
    }
    for (auto& s : all) {
      s->cancel = true;
      {
        std::lock_guard lock(s->mu);
        s->closed = true;
        s->cv.notify_all();
      }
    }
    server.stop();
    for (auto& s : all) {
      if (s->worker.joinable()) s->worker.join();
    }
  }

  void run_worker(std::shared_ptr<Session> session, int episode, std::string instruction,
                  AgentConfig config, Scene initial, std::optional<EpisodeResult> prior) {
    EpisodeOptions eo;
    eo.factory = options.factory.get();
    eo.episode_id = session->id + "-" + std::to_string(episode);
    eo.output_dir = episode_dir(session->id, episode);
    eo.cancel = &session->cancel;
    eo.on_step = [&](const StepEvent& ev) {
      json event{{"type", "step"},
                 {"episode", episode},
                 {"step", ev.step.index},
                 {"raw_output", ev.step.raw_output},
                 {"action", action_json(ev.step.action)},
                 {"resolved", action_json(ev.step.resolved)},
                 {"thought", ev.step.action && ev.step.action->thought
                                 ? json(*ev.step.action->thought)
                                 : json(nullptr)},
                 {"error", ev.step.error ? json{{"kind", to_string(ev.step.error->kind)},
                                                {"message", ev.step.error->message}}
                                         : json(nullptr)},
                 {"outcome", ev.step.outcome ? json{{"status", to_string(ev.step.outcome->status)},
                                                    {"detail", ev.step.outcome->detail}}
                                             : json(nullptr)},
                 {"warnings", ev.step.warnings},
                 {"scene", scene_json(ev.scene)},
                 {"scene_hash", ev.step.scene_hash},
                 {"views", json::array()}};
      if (ev.views) {
        event["views"] = {view_url(session->id, episode, ev.step.index, "overview"),
                          view_url(session->id, episode, ev.step.index, "topdown")};
      }
      std::lock_guard lock(session->mu);
      session->scene = ev.scene;
      session->current.steps.push_back(ev.step);
      session->push_event(std::move(event));
    };

    std::optional<EpisodeResult> result;
    std::string failure;
    try {
      auto backend = options.backends(session->id, episode, instruction);
      if (!backend) throw BackendError("no backend available");
      result = prior ? continue_episode(*prior, instruction, config, *backend, eo)
                     : run_episode(config, instruction, initial, *backend, eo);
    } catch (const std::exception& e) {
      failure = e.what();
    }

    std::lock_guard lock(session->mu);
    json terminal{{"type", "terminal"}, {"episode", episode}};
    if (result) {
      session->scene = result->final_scene;
      session->transcripts += transcript_to_jsonl(result->transcript);
      terminal["reason"] = to_string(result->termination);
      terminal["detail"] = result->transcript.termination_detail;
      terminal["steps"] = result->transcript.steps.size();
      session->last = std::move(result);
    } else {
      // The scene is unchanged from the last consistent step.
      terminal["reason"] = to_string(Termination::backend_failure);
      terminal["detail"] = failure;
      terminal["steps"] = session->current.steps.size();
      session->last = EpisodeResult{session->scene, session->current, Termination::backend_failure};
    }
    terminal["scene"] = scene_json(session->scene);
    terminal["scene_hash"] = scene_hash(session->scene);
    session->status = SessionStatus::awaiting_instruction;
    session->push_event(std::move(terminal));
  }

  void routes() {
    const std::string base(kApi);

    server.Get(base + "/health", [](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, json{{"status", "ok"}});
    });

    server.Post(base + "/sessions", [this](const httplib::Request& req, httplib::Response& res) {
      json body = req.body.empty() ? json::object() : json::parse(req.body, nullptr, false);
      if (body.is_discarded() || !body.is_object()) return send_error(res, 400, "body must be a JSON object");
      Scene scene;
      try {
        if (body.contains("scene")) {
          scene = deserialize_scene(body["scene"].is_string() ? body["scene"].get<std::string>()
                                                              : body["scene"].dump());
        } else if (body.contains("fixture")) {
          const std::string name = body["fixture"].get<std::string>();
          if (name.find('/') != std::string::npos || name.find("..") != std::string::npos) {
            return send_error(res, 400, "invalid fixture name");
          }
          auto path = options.fixtures_dir / (name + ".json");
          if (!std::filesystem::exists(path)) return send_error(res, 404, "unknown fixture '" + name + "'");
          scene = load_scene_file(path.string());
        }
      } catch (const std::exception& e) {
        return send_error(res, 400, e.what());
      }
      auto session = std::make_shared<Session>(new_session_id(), scene);
      {
        std::lock_guard lock(sessions_mu);
        sessions.emplace(session->id, session);
      }
      send_json(res, 201, json{{"session_id", session->id},
                               {"status", to_string(SessionStatus::idle)},
                               {"scene", scene_json(scene)}});
    });

    const std::string sid = base + R"(/sessions/([0-9a-zA-Z_-]+))";

    server.Get(sid, [this](const httplib::Request& req, httplib::Response& res) {
      auto s = find(req.matches[1]);
      if (!s) return send_error(res, 404, "unknown session");
      std::lock_guard lock(s->mu);
      send_json(res, 200, json{{"session_id", s->id},
                               {"status", to_string(s->status)},
                               {"episodes", s->episodes},
                               {"events", s->events.size()},
                               {"scene", scene_json(s->scene)}});
    });

    server.Post(sid + "/instructions", [this](const httplib::Request& req, httplib::Response& res) {
      auto s = find(req.matches[1]);
      if (!s) return send_error(res, 404, "unknown session");
      json body = json::parse(req.body, nullptr, false);
      if (body.is_discarded() || !body.is_object() || !body.contains("instruction") ||
          !body["instruction"].is_string()) {
        return send_error(res, 400, "body must contain a string \"instruction\"");
      }
      AgentConfig config = options.default_config;
      if (body.contains("preset")) {
        auto preset = preset_config(body["preset"].is_string() ? body["preset"].get<std::string>() : "");
        if (!preset) return send_error(res, 400, "unknown preset");
        config = *preset;
      }
      std::string instruction = body["instruction"].get<std::string>();

      std::lock_guard lock(s->mu);
      if (s->closed) return send_error(res, 503, "service stopping");
      if (s->status == SessionStatus::running) return send_error(res, 409, "an episode is already running");
      if (s->worker.joinable()) s->worker.join();
      const int episode = s->episodes++;
      s->status = SessionStatus::running;
      s->cancel = false;
      s->current = Transcript{};
      s->push_event(json{{"type", "episode_started"},
                         {"episode", episode},
                         {"instruction", instruction},
                         {"preset", config.preset}});
      s->worker = std::thread(&Impl::run_worker, this, s, episode, instruction, config, s->scene,
                              s->last);
      send_json(res, 202, json{{"session_id", s->id}, {"episode", episode}, {"status", "running"}});
    });

    server.Post(sid + "/cancel", [this](const httplib::Request& req, httplib::Response& res) {
      auto s = find(req.matches[1]);
      if (!s) return send_error(res, 404, "unknown session");
      std::lock_guard lock(s->mu);
      if (s->status != SessionStatus::running) return send_error(res, 409, "no running episode");
      s->cancel = true;
      send_json(res, 202, json{{"session_id", s->id}, {"cancelling", true}});
    });

    server.Get(sid + "/scene", [this](const httplib::Request& req, httplib::Response& res) {
      auto s = find(req.matches[1]);
      if (!s) return send_error(res, 404, "unknown session");
      std::lock_guard lock(s->mu);
      res.set_content(serialize_scene(s->scene), "application/json");
    });

    server.Get(sid + "/transcript", [this](const httplib::Request& req, httplib::Response& res) {
      auto s = find(req.matches[1]);
      if (!s) return send_error(res, 404, "unknown session");
      std::lock_guard lock(s->mu);
      std::string body = s->transcripts;
      if (s->status == SessionStatus::running) {
        for (const auto& step : s->current.steps) body += step_to_json(step) + "\n";
      }
      res.set_content(body, "application/x-ndjson");
    });

    server.Get(sid + "/events\\.json", [this](const httplib::Request& req, httplib::Response& res) {
      auto s = find(req.matches[1]);
      if (!s) return send_error(res, 404, "unknown session");
      std::size_t since = req.has_param("since") ? std::stoul(req.get_param_value("since")) : 0;
      int wait_ms = req.has_param("wait_ms") ? std::stoi(req.get_param_value("wait_ms")) : 0;
      std::unique_lock lock(s->mu);
      s->cv.wait_for(lock, std::chrono::milliseconds(std::clamp(wait_ms, 0, 60000)),
                     [&] { return s->events.size() > since || s->closed; });
      json out = json::array();
      for (std::size_t i = since; i < s->events.size(); ++i) out.push_back(s->events[i]);
      send_json(res, 200, out);
    });

    server.Get(sid + "/events", [this](const httplib::Request& req, httplib::Response& res) {
      auto s = find(req.matches[1]);
      if (!s) return send_error(res, 404, "unknown session");
      auto cursor = std::make_shared<std::size_t>(
          req.has_param("since") ? std::stoul(req.get_param_value("since")) : 0);
      const bool until_terminal = req.get_param_value("until_terminal") == "1";
      res.set_header("Cache-Control", "no-cache");
      res.set_chunked_content_provider(
          "text/event-stream", [s, cursor, until_terminal](std::size_t, httplib::DataSink& sink) {
            std::vector<json> batch;
            {
              std::unique_lock lock(s->mu);
              s->cv.wait_for(lock, std::chrono::seconds(10),
                             [&] { return s->events.size() > *cursor || s->closed; });
              if (s->closed) return false;
              for (; *cursor < s->events.size(); ++*cursor) batch.push_back(s->events[*cursor]);
            }
            if (batch.empty()) {
              const std::string ping = ": keepalive\n\n";
              return sink.write(ping.data(), ping.size());
            }
            for (const auto& ev : batch) {
              std::string frame = "id: " + std::to_string(ev["seq"].get<std::size_t>()) +
                                  "\nevent: " + ev["type"].get<std::string>() + "\ndata: " +
                                  dump(ev) + "\n\n";
              if (!sink.write(frame.data(), frame.size())) return false;
              if (until_terminal && ev["type"] == "terminal") {
                sink.done();
                return true;
              }
            }
            return true;
          });
    });

    server.Get(sid + R"(/episodes/(\d+)/views/(step\d+_(?:overview|topdown)\.png))",
               [this](const httplib::Request& req, httplib::Response& res) {
                 auto s = find(req.matches[1]);
                 if (!s) return send_error(res, 404, "unknown session");
                 auto path = episode_dir(s->id, std::stoi(req.matches[2])) / req.matches[3].str();
                 std::ifstream in(path, std::ios::binary);
                 if (!in) return send_error(res, 404, "no such view");
                 std::ostringstream ss;
                 ss << in.rdbuf();
                 res.set_content(ss.str(), "image/png");
               });

    server.set_exception_handler([](const httplib::Request&, httplib::Response& res,
                                    std::exception_ptr ep) {
      try {
        std::rethrow_exception(ep);
      } catch (const std::exception& e) {
        send_error(res, 500, e.what());
      } catch (...) {
        send_error(res, 500, "internal error");
      }
    });
  }
};

Service::Service(ServiceOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}

Service::~Service() = default;

bool Service::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }

int Service::bind_to_any_port(const std::string& host) { return impl_->server.bind_to_any_port(host); }

bool Service::listen_after_bind() { return impl_->server.listen_after_bind(); }

void Service::wait_until_ready() const { impl_->server.wait_until_ready(); }

void Service::stop() { impl_->shutdown(); }

}  // namespace layout_agent
