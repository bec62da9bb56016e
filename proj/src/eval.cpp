#include "layout_agent/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

namespace layout_agent {

using nlohmann::json;

namespace {

constexpr std::pair<PredicateKind, std::string_view> kKindNames[] = {
    {PredicateKind::count_equals, "count_equals"}, {PredicateKind::near, "near"},
    {PredicateKind::left_of, "left_of"},           {PredicateKind::right_of, "right_of"},
    {PredicateKind::in_front_of, "in_front_of"},   {PredicateKind::behind, "behind"},
    {PredicateKind::against_wall, "against_wall"}, {PredicateKind::in_center, "in_center"},
};

bool uses_threshold(PredicateKind kind) {
  return kind == PredicateKind::near || kind == PredicateKind::against_wall ||
         kind == PredicateKind::in_center;
}

std::string fmt_number(double v, const char* spec = "%g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

}  // namespace

std::string_view to_string(PredicateKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

std::optional<PredicateKind> predicate_kind_from_string(std::string_view s) {
  for (const auto& [k, name] : kKindNames) {
    if (name == s) return k;
  }
  return std::nullopt;
}

std::string Predicate::describe() const {
  std::string out(to_string(kind));
  out += "(" + subject;
  if (kind == PredicateKind::count_equals) {
    out += " == " + std::to_string(expected_count);
  } else {
    out += ", " + (region ? std::string("region") : reference);
    if (uses_threshold(kind)) out += ", <= " + fmt_number(threshold);
  }
  out += ")";
  if (quantifier == Quantifier::any && kind != PredicateKind::count_equals) out += " [any]";
  return out;
}

bool name_matches(std::string_view name, std::string_view pattern) {
  std::string n = normalize_object_name(name);
  std::string p = normalize_object_name(pattern);
  return !p.empty() && n.find(p) != std::string::npos;
}

bool check_predicate(const Scene& scene, const Predicate& p) {
  if (uses_threshold(p.kind) && !(p.threshold > 0.0)) {
    throw EvalError("predicate " + p.describe() + ": threshold must be > 0");
  }

  std::vector<const SceneObject*> subjects;
  for (const auto& o : scene.objects()) {
    if (o.origin == ObjectOrigin::agent_placed && name_matches(o.name, p.subject)) {
      subjects.push_back(&o);
    }
  }
  if (p.kind == PredicateKind::count_equals) {
    return static_cast<int>(subjects.size()) == p.expected_count;
  }

  std::function<bool(const SceneObject&)> holds;
  if (p.kind == PredicateKind::against_wall) {
    std::vector<const Wall*> walls;
    if (p.reference == "any") {
      for (const auto& w : scene.walls()) walls.push_back(&w);
    } else if (const Wall* w = scene.find_wall(p.reference)) {
      walls.push_back(w);
    } else {
      throw EvalError("predicate " + p.describe() + ": unknown wall id '" + p.reference + "'");
    }
    holds = [walls, &p](const SceneObject& s) {
      return std::any_of(walls.begin(), walls.end(), [&](const Wall* w) {
        return rect_gap(s.rect(), w->rect()) <= p.threshold;
      });
    };
  } else if (p.kind == PredicateKind::in_center) {
    Rect region;
    if (p.region) {
      region = *p.region;
    } else if (p.reference == "bounds") {
      region = scene.bounds();
    } else {
      throw EvalError("predicate " + p.describe() + ": unknown region '" + p.reference + "'");
    }
    holds = [region, &p](const SceneObject& s) {
      return std::hypot(s.position.x() - region.center_x(), s.position.y() - region.center_y()) <=
             p.threshold;
    };
  } else {
    std::vector<const SceneObject*> references;
    for (const auto& o : scene.objects()) {
      if (name_matches(o.name, p.reference)) references.push_back(&o);
    }
    auto relation = [&p](const SceneObject& s, const SceneObject& r) {
      const Rect rr = r.rect();
      switch (p.kind) {
        case PredicateKind::near: return rect_gap(s.rect(), rr) <= p.threshold;
        case PredicateKind::left_of: return s.position.x() < rr.min_x;
        case PredicateKind::right_of: return s.position.x() > rr.max_x;
        case PredicateKind::in_front_of: return s.position.y() < rr.min_y;
        case PredicateKind::behind: return s.position.y() > rr.max_y;
        default: return false;
      }
    };
    holds = [references, relation](const SceneObject& s) {
      return std::any_of(references.begin(), references.end(), [&](const SceneObject* r) {
        return r != &s && relation(s, *r);
      });
    };
  }

  if (subjects.empty()) return false;
  auto check = [&](const SceneObject* s) { return holds(*s); };
  return p.quantifier == Quantifier::all ? std::all_of(subjects.begin(), subjects.end(), check)
                                         : std::any_of(subjects.begin(), subjects.end(), check);
}

namespace {

Predicate predicate_from_json(const json& j, const std::string& where) {
  Predicate p;
  auto kind = predicate_kind_from_string(j.at("kind").get<std::string>());
  if (!kind) throw EvalError(where + ": unknown predicate kind");
  p.kind = *kind;
  p.subject = j.at("subject").get<std::string>();
  p.reference = j.value("reference", "");
  p.threshold = j.value("threshold", 0.0);
  p.expected_count = j.value("expected_count", 0);
  const std::string q = j.value("quantifier", "all");
  if (q != "all" && q != "any") throw EvalError(where + ": quantifier must be all or any");
  p.quantifier = q == "any" ? Quantifier::any : Quantifier::all;
  if (j.contains("region")) {
    const json& r = j["region"];
    p.region = Rect{r.at("min_x").get<double>(), r.at("min_y").get<double>(),
                    r.at("max_x").get<double>(), r.at("max_y").get<double>()};
  }
  if (uses_threshold(p.kind) && !(p.threshold > 0.0)) {
    throw EvalError(where + ": threshold must be > 0");
  }
  return p;
}

}  // namespace

EvalTask load_task(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw EvalError("cannot open task file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
    EvalTask task;
    task.id = doc.at("id").get<int>();
    task.instruction = doc.at("instruction").get<std::string>();
    task.fixture = path.parent_path() / doc.at("fixture").get<std::string>();
    task.initial_scene = load_scene_file(task.fixture.string());
    const json& preds = doc.at("predicates");
    for (std::size_t i = 0; i < preds.size(); ++i) {
      task.predicates.push_back(predicate_from_json(
          preds[i], path.string() + ": predicates[" + std::to_string(i) + "]"));
    }
    return task;
  } catch (const json::exception& e) {
    throw EvalError(path.string() + ": " + e.what());
  }
}

std::vector<EvalTask> load_tasks(const std::filesystem::path& dir) {
  std::vector<EvalTask> tasks;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() == ".json") tasks.push_back(load_task(entry.path()));
  }
  std::sort(tasks.begin(), tasks.end(), [](const EvalTask& a, const EvalTask& b) { return a.id < b.id; });
  return tasks;
}

int rubric_score(std::size_t satisfied, std::size_t total) {
  if (satisfied >= total) return 3;
  if (satisfied >= (total + 1) / 2) return 2;
  return 1;
}

TaskScore score_task(const EvalTask& task, const Scene& final_scene) {
  TaskScore score;
  std::size_t satisfied = 0;
  for (const auto& p : task.predicates) {
    bool ok = check_predicate(final_scene, p);
    satisfied += ok ? 1 : 0;
    score.results.push_back({p, ok});
  }
  score.value = rubric_score(satisfied, task.predicates.size());
  return score;
}

std::optional<double> Report::method_mean(std::string_view preset) const {
  double sum = 0;
  int n = 0;
  for (const auto& c : cells) {
    if (c.preset == preset) {
      sum += c.score;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

std::optional<double> Report::task_mean(std::string_view preset, int task_id) const {
  double sum = 0;
  int n = 0;
  for (const auto& c : cells) {
    if (c.preset == preset && c.task_id == task_id) {
      sum += c.score;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

std::string Report::to_table() const {
  std::ostringstream out;
  auto pad = [](std::string s, std::size_t w) {
    if (s.size() < w) s.append(w - s.size(), ' ');
    return s;
  };
  constexpr std::size_t kLabelWidth = 30;
  out << pad("Method", kLabelWidth);
  for (int id : task_ids) out << pad("Task " + std::to_string(id), 8);
  out << "Evaluation Score (1.0 - 3.0)\n";
  for (const auto& preset : presets) {
    out << pad(preset_label(preset), kLabelWidth);
    for (int id : task_ids) {
      auto m = task_mean(preset, id);
      out << pad(m ? fmt_number(*m, "%.2f") : "-", 8);
    }
    auto mean = method_mean(preset);
    out << (mean ? fmt_number(*mean, "%.1f") : "-") << "\n";
  }
  int flagged = 0;
  for (const auto& c : cells) flagged += c.flagged ? 1 : 0;
  out << "trials per cell: " << trials << ", episodes: " << cells.size()
      << ", flagged failures: " << flagged << "\n";
  return out.str();
}

std::string Report::to_json() const {
  json j;
  j["trials"] = trials;
  j["presets"] = presets;
  j["task_ids"] = task_ids;
  json cells_json = json::array();
  for (const auto& c : cells) {
    cells_json.push_back({{"preset", c.preset},
                          {"task_id", c.task_id},
                          {"trial", c.trial},
                          {"score", c.score},
                          {"termination", c.termination ? json(to_string(*c.termination)) : json(nullptr)},
                          {"flagged", c.flagged},
                          {"note", c.note}});
  }
  j["cells"] = std::move(cells_json);
  json means = json::object();
  for (const auto& preset : presets) {
    auto m = method_mean(preset);
    means[preset] = m ? json(*m) : json(nullptr);
  }
  j["method_means"] = std::move(means);
  return j.dump(2, ' ', false, json::error_handler_t::replace) + "\n";
}

Report run_matrix(const std::vector<AgentConfig>& methods, const std::vector<EvalTask>& tasks,
                  int trials, const BackendFactory& backends, const MatrixOptions& options) {
  if (options.factory == nullptr) throw std::invalid_argument("run_matrix: factory is required");
  Report report;
  report.trials = std::max(0, trials);
  for (const auto& m : methods) report.presets.push_back(m.preset);
  for (const auto& t : tasks) report.task_ids.push_back(t.id);

  struct Job {
    const AgentConfig* config;
    const EvalTask* task;
    int trial;
  };
  std::vector<Job> jobs;
  for (const auto& m : methods) {
    for (const auto& t : tasks) {
      for (int k = 0; k < trials; ++k) jobs.push_back({&m, &t, k});
    }
  }
  report.cells.resize(jobs.size());

  auto run_job = [&](std::size_t i) {
    const Job& job = jobs[i];
    ReportCell& cell = report.cells[i];
    cell.preset = job.config->preset;
    cell.task_id = job.task->id;
    cell.trial = job.trial;
    try {
      auto backend = backends(*job.config, *job.task, job.trial);
      EpisodeOptions eo;
      eo.factory = options.factory;
      eo.episode_id = job.config->preset + "_task" + std::to_string(job.task->id) + "_trial" +
                      std::to_string(job.trial);
      if (options.output_dir) eo.output_dir = *options.output_dir / "episodes" / eo.episode_id;
      EpisodeResult r = run_episode(*job.config, job.task->instruction, job.task->initial_scene,
                                    *backend, eo);
      cell.termination = r.termination;
      if (r.termination == Termination::backend_failure ||
          r.termination == Termination::unrecoverable_parse) {
        cell.flagged = true;
        cell.score = 1;
        cell.note = r.transcript.termination_detail;
      } else {
        cell.score = score_task(*job.task, r.final_scene).value;
      }
    } catch (const std::exception& e) {
      cell.flagged = true;
      cell.score = 1;
      cell.note = e.what();
    }
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(options.workers, jobs.size()));
  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) run_job(i);
      });
    }
  }
  return report;
}

}  // namespace layout_agent
