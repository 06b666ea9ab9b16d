#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "stacklab/core_model.hpp"
#include "stacklab/preference.hpp"
#include "stacklab/stability_sim.hpp"

namespace stacklab {

struct Range {
  double lo = 0.0;
  double hi = 0.0;

  bool operator==(const Range&) const = default;
};

/// Scenario sampling parameters. Densities in kg/m^3, lengths in meters.
struct GenConfig {
  int min_boxes = 3;
  int max_boxes = 6;
  int min_objects = 1;
  int max_objects = 7;
  std::vector<double> box_densities{690.0, 700.0, 1530.0};
  // 2700 appears twice on purpose: it doubles that material's weight.
  std::vector<double> object_densities{700.0,  1530.0, 2700.0,  2700.0, 7800.0,
                                       8600.0, 9000.0, 11300.0, 19300.0};
  Range box_wd{0.12, 0.40};
  Range box_h{0.08, 0.30};
  double fill_fraction = 0.5;
  double wall = kDefaultWallThickness;
  std::uint64_t master_seed = 0;
  int max_fit_retries = 64;
  int max_resamples = 500;

  bool operator==(const GenConfig&) const = default;
};

void validate(const GenConfig& cfg);
void to_json(nlohmann::json& j, const GenConfig& cfg);
void from_json(const nlohmann::json& j, GenConfig& cfg);

/// Pure function of (cfg.master_seed, index). Throws GenExhausted when the
/// contents of a box cannot be made to fit within max_fit_retries.
Scenario sample_scenario(const GenConfig& cfg, std::uint64_t index);

struct FeasibleScenario {
  Scenario scenario;
  StackCatalog catalog;
  ScoredStack best;
  std::uint64_t index = 0;  ///< Index that produced the accepted scenario.
  int attempts = 0;
};

/// Disjoint scenario index ranges for the dataset builder and the eval suite.
enum class SampleStream : std::uint64_t { dataset = 0, eval = 1 };

/// First index tried for slot `slot` of preference set `set`. Each slot owns
/// 2^16 consecutive indices, which bounds max_resamples.
std::uint64_t slot_index(SampleStream stream, std::size_t set, std::size_t slot);

inline constexpr double kDefaultFeasibilityThreshold = 0.4;

/// Samples indices first_index, first_index + 1, ... until a scenario's best
/// achievable joint score reaches `threshold`. Throws GenExhausted after
/// cfg.max_resamples attempts.
FeasibleScenario sample_feasible(const GenConfig& cfg, const PhysParams& params,
                                 const PreferenceSet& prefs, double threshold,
                                 std::uint64_t first_index, const CatalogCache* cache = nullptr,
                                 std::size_t workers = 1);

}  // namespace stacklab
