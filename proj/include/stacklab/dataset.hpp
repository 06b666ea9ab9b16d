#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stacklab/agents.hpp"
#include "stacklab/core_model.hpp"
#include "stacklab/preference.hpp"
#include "stacklab/scenario_gen.hpp"
#include "stacklab/stability_sim.hpp"

namespace stacklab {

/// One reveal of the online trajectory.
struct TrajectoryStep {
  Measurement reveal;
  Sequence stack_before;
  std::vector<Action> actions;  ///< Empty means the step waits.
  Sequence stack_after;
  bool switched = false;        ///< The target changed at this step.
};

struct Trajectory {
  std::string scenario_id;
  PreferenceSet prefs;
  Sequence initial_target;
  Sequence final_stack;
  double final_score = 0.0;  ///< Joint score of final_stack under prefs.
  Sequence best_stack;       ///< Best achievable stack; the offline answer.
  std::vector<TrajectoryStep> steps;

  /// Actions of all steps, waits dropped.
  std::vector<Action> all_actions() const;
};

/// Member of A_S to aim for before any latent property is known: best on the
/// apparent preferences, then on the full set, then lexicographically
/// smallest. Throws NoStableStack.
Sequence select_target(const StackCatalog& catalog, const PreferenceSet& prefs,
                       const PropertyTable& props);

/// Scripted trajectory that reveals boxes in scenario.reveal_order and keeps
/// the partial stack consistent with a completed stable stack. The final stack
/// is always in A_S. Throws BrokenCatalog or NoStableStack.
Trajectory build_trajectory(const Scenario& scenario, const StackCatalog& catalog,
                            const PreferenceSet& prefs,
                            std::optional<Sequence> initial_target = std::nullopt);

struct ChatSample {
  std::vector<ChatMessage> messages;  ///< Alternating user / assistant turns.
  nlohmann::ordered_json meta;
};

struct EmitOptions {
  bool online = true;
  bool offline = true;
  /// Also emit one single-turn sample per online step.
  bool per_prefix = false;
};

/// Chat samples for one trajectory. Preference text always comes from the
/// train split of the template bank, picked with `template_key`.
std::vector<ChatSample> emit_samples(const Scenario& scenario, const Trajectory& trajectory,
                                     std::uint64_t template_key, const EmitOptions& options = {});

nlohmann::ordered_json to_json_line(const ChatSample& sample);
ChatSample chat_sample_from_json(const nlohmann::ordered_json& j);

struct DatasetConfig {
  GenConfig gen;
  PhysParams physics;
  std::vector<PreferenceSet> preference_sets = benchmark_preference_sets();
  int scenarios_per_set = 100;
  double threshold = 0.0;
  std::uint64_t template_seed = 1;
  EmitOptions emit;
};

void to_json(nlohmann::json& j, const DatasetConfig& c);
void from_json(const nlohmann::json& j, DatasetConfig& c);

struct Dataset {
  std::vector<ChatSample> samples;
  nlohmann::ordered_json manifest;
};

/// Samples feasible scenarios per preference set and converts their
/// trajectories to chat samples. Output order and content do not depend on
/// `workers`.
Dataset build_dataset(const DatasetConfig& cfg, const CatalogCache* cache = nullptr,
                      std::size_t workers = 1);

/// Writes `<path>` as JSONL and `<path>.manifest.json` next to it.
void write_dataset(const Dataset& dataset, const std::string& path);
std::vector<ChatSample> read_dataset(const std::string& path);

}  // namespace stacklab
