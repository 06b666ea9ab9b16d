#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
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

enum class FailureCause { none, collapse, incomplete, parse, illegal, endpoint };

std::string_view to_string(FailureCause cause);
FailureCause failure_cause_from_string(std::string_view text);

struct EpisodeResult {
  std::string scenario_id;
  std::string preferences;  ///< PreferenceSet::to_string()
  std::string agent;
  Mode mode = Mode::offline;
  std::size_t box_count = 0;
  bool success = false;
  Sequence final_stack;
  double raw_score = 0.0;
  double best_score = 0.0;
  double relative_score = 0.0;  ///< raw / best, clamped to [0, 1].
  double success_scaled = 0.0;  ///< success * relative_score.
  std::size_t action_count = 0;
  FailureCause cause = FailureCause::none;
  int template_id = -1;
  std::string detail;                ///< Error text for failed episodes.
  std::vector<std::string> replies;  ///< Rendered plan per turn.

  bool operator==(const EpisodeResult&) const = default;
};

struct EpisodeOptions {
  /// Decide collapses with the catalog's disturbances; otherwise draw fresh
  /// prefix-keyed disturbances from `seed`.
  bool frozen_noise = true;
  double budget_factor = 4.0;  ///< Action budget is budget_factor * K.
  NoiseConfig noise;           ///< Measurement noise seen by the agent.
  std::uint64_t seed = 0;
  std::uint64_t template_key = 0;  ///< Picks the eval-split preference template.
};

/// Runs one episode. Agent errors are recorded as failure causes, never thrown.
EpisodeResult run_episode(const Scenario& scenario, const StackCatalog& catalog,
                          const PreferenceSet& prefs, Agent& agent, Mode mode,
                          const PhysParams& physics, const EpisodeOptions& options = {});

struct EpisodeContext {
  const Scenario& scenario;
  const StackCatalog& catalog;
  const PreferenceSet& prefs;
  Mode mode;
  std::uint64_t seed;
};

using AgentFactory =
    std::function<std::unique_ptr<Agent>(const std::string& agent, const EpisodeContext& ctx)>;

/// Builds "oracle", "greedy" and "random"; throws std::invalid_argument otherwise.
std::unique_ptr<Agent> make_baseline_agent(const std::string& agent, const EpisodeContext& ctx);

struct SuiteConfig {
  GenConfig gen;
  PhysParams physics;
  NoiseConfig noise;
  std::vector<PreferenceSet> preference_sets = benchmark_preference_sets();
  std::vector<std::string> agents{"oracle", "greedy", "random"};
  std::vector<Mode> modes{Mode::offline, Mode::online};
  int scenarios_per_set = 40;
  double threshold = kDefaultFeasibilityThreshold;
  bool frozen_noise = true;
  double budget_factor = 4.0;
  std::uint64_t episode_seed = 0;
};

void to_json(nlohmann::json& j, const SuiteConfig& c);
void from_json(const nlohmann::json& j, SuiteConfig& c);

struct MetricsCell {
  std::size_t episodes = 0;
  std::size_t successes = 0;
  double success_rate = 0.0;
  std::optional<double> preference_score;  ///< Mean relative score over successes.
  double success_scaled = 0.0;

  bool operator==(const MetricsCell&) const = default;
};

struct MetricsRow {
  std::string preferences;  ///< "all" in per-agent aggregates.
  std::string agent;
  Mode mode = Mode::offline;
  std::size_t box_count = 0;  ///< 0 aggregates every box count.
  MetricsCell cell;

  bool operator==(const MetricsRow&) const = default;
};

struct MetricsTable {
  std::vector<MetricsRow> rows;

  const MetricsRow* find(const std::string& preferences, const std::string& agent, Mode mode,
                         std::size_t box_count = 0) const;
  bool operator==(const MetricsTable&) const = default;
};

/// Aggregates by (preference set, agent, mode, box count), plus box count 0
/// and preference set "all" rollups. Independent of result order.
MetricsTable aggregate(const std::vector<EpisodeResult>& results);

struct SuiteScenario {
  std::size_t set = 0;
  std::size_t slot = 0;
  FeasibleScenario feasible;
};

struct SuiteResult {
  std::vector<SuiteScenario> scenarios;
  std::vector<EpisodeResult> results;  ///< Ordered by (set, slot, agent, mode).
  MetricsTable table;
};

/// Samples scenarios_per_set feasible scenarios per preference set and runs
/// every (agent, mode) on each. Output does not depend on `workers`.
SuiteResult run_suite(const SuiteConfig& cfg, const AgentFactory& factory,
                      const CatalogCache* cache = nullptr, std::size_t workers = 1);

// Export.

/// Per-episode CSV with a fixed column order (see docs/formats.md).
std::string results_csv(const std::vector<EpisodeResult>& results);
std::vector<EpisodeResult> parse_results_csv(const std::string& text);

std::string metrics_csv(const MetricsTable& table);
/// Table with one row per (preference set, agent, mode) and one column per
/// box count; cells read "s / p / sp".
std::string metrics_markdown(const MetricsTable& table);
nlohmann::ordered_json metrics_summary(const MetricsTable& table);

/// Writes results.csv, metrics.csv, metrics.md and summary.json into `dir`.
void export_results(const std::vector<EpisodeResult>& results, const MetricsTable& table,
                    const std::string& dir);

std::string format_cell(const MetricsCell& cell);

}  // namespace stacklab
