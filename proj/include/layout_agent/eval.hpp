#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "layout_agent/agent.hpp"
#include "layout_agent/backend.hpp"
#include "layout_agent/config.hpp"
#include "layout_agent/scene.hpp"

namespace layout_agent {

// Geometric stand-ins for human judgement of a final layout.
//
// Conventions: +x is right, +y is back, so "in front of" means smaller y. Subjects are the
// agent-placed objects whose normalized name contains the subject pattern; references are any
// objects (preinstalled or placed) matching the reference pattern. A relational predicate holds
// for a subject when some reference satisfies it; the quantifier decides whether every subject
// (all) or at least one (any) must. No matching subject means the predicate fails.

enum class PredicateKind {
  count_equals,
  near,
  left_of,
  right_of,
  in_front_of,
  behind,
  against_wall,
  in_center,
};

enum class Quantifier { all, any };

std::string_view to_string(PredicateKind kind);
std::optional<PredicateKind> predicate_kind_from_string(std::string_view s);

struct Predicate {
  PredicateKind kind = PredicateKind::count_equals;
  std::string subject;
  /// Object pattern, wall id (or "any" for against_wall), or "bounds" for in_center.
  std::string reference;
  /// Grid units; used by near, against_wall, in_center and must be > 0 there.
  double threshold = 0.0;
  int expected_count = 0;
  Quantifier quantifier = Quantifier::all;
  /// Explicit in_center region; overrides `reference`.
  std::optional<Rect> region;

  std::string describe() const;
};

struct EvalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Case-insensitive substring match on normalized names.
bool name_matches(std::string_view name, std::string_view pattern);

/// Throws EvalError for an unknown wall id or region, or a non-positive threshold.
bool check_predicate(const Scene& scene, const Predicate& predicate);

struct EvalTask {
  int id = 0;
  std::string instruction;
  std::filesystem::path fixture;
  Scene initial_scene;
  std::vector<Predicate> predicates;
};

/// Task JSON: {"id", "instruction", "fixture" (relative to the task file), "predicates": [...]}.
EvalTask load_task(const std::filesystem::path& path);
/// Every `*.json` in `dir`, sorted by id.
std::vector<EvalTask> load_tasks(const std::filesystem::path& dir);

struct PredicateResult {
  Predicate predicate;
  bool satisfied = false;
};

struct TaskScore {
  int value = 1;
  std::vector<PredicateResult> results;
};

/// 3 when every predicate holds, 2 when at least ceil(n/2) hold, otherwise 1.
int rubric_score(std::size_t satisfied, std::size_t total);
TaskScore score_task(const EvalTask& task, const Scene& final_scene);

struct ReportCell {
  std::string preset;
  int task_id = 0;
  int trial = 0;
  int score = 1;
  std::optional<Termination> termination;
  /// Set when the episode failed (backend failure, unparseable output, or an exception).
  bool flagged = false;
  std::string note;
};

struct Report {
  std::vector<std::string> presets;
  std::vector<int> task_ids;
  int trials = 0;
  std::vector<ReportCell> cells;

  /// Mean over all trials and tasks of a preset; nullopt when it has no cells.
  std::optional<double> method_mean(std::string_view preset) const;
  std::optional<double> task_mean(std::string_view preset, int task_id) const;
  std::string to_table() const;
  std::string to_json() const;
};

using BackendFactory =
    std::function<std::unique_ptr<Backend>(const AgentConfig&, const EvalTask&, int trial)>;

struct MatrixOptions {
  ObjectFactory* factory = nullptr;
  /// Transcripts go to <output_dir>/episodes/<preset>_task<id>_trial<k>/.
  std::optional<std::filesystem::path> output_dir;
  unsigned workers = 1;
};

/// Runs `trials` episodes for every (method, task) pair. Episode failures score 1 and are flagged.
Report run_matrix(const std::vector<AgentConfig>& methods, const std::vector<EvalTask>& tasks,
                  int trials, const BackendFactory& backends, const MatrixOptions& options);

}  // namespace layout_agent
