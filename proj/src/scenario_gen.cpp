#include "stacklab/scenario_gen.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "stacklab/errors.hpp"
#include "stacklab/rng.hpp"

namespace stacklab {

namespace {

// Content sizes as fractions of the inner cavity before the fill rescale.
constexpr double kMinFraction = 0.15;
constexpr double kMaxFraction = 0.9;
// Smallest content dimension kept after rescaling.
constexpr double kMinContentDim = 0.005;

void check_range(const Range& r, const char* name) {
  if (!(r.lo > 0.0 && r.lo <= r.hi)) {
    throw std::invalid_argument(std::string(name) + " range must satisfy 0 < lo <= hi");
  }
}

ContentObject sample_object(const GenConfig& cfg, const BoxSpec& box, Rng& rng) {
  const int shape_index = static_cast<int>(rng.below(3));
  const double density = rng.pick(cfg.object_densities);
  const double fw = rng.uniform(kMinFraction, kMaxFraction);
  const double fd = rng.uniform(kMinFraction, kMaxFraction);
  const double fh = rng.uniform(kMinFraction, kMaxFraction);
  switch (shape_index) {
    case 0: {
      const double diameter = fw * std::min({box.inner_w(), box.inner_d(), box.inner_h()});
      return {Shape::sphere, diameter, diameter, diameter, density};
    }
    case 1: {
      const double diameter = fw * std::min(box.inner_w(), box.inner_d());
      return {Shape::cylinder, diameter, diameter, fh * box.inner_h(), density};
    }
    default:
      return {Shape::cuboid, fw * box.inner_w(), fd * box.inner_d(), fh * box.inner_h(), density};
  }
}

/// Uniform rescale of all contents so their bounding volume fits the fill
/// budget. Stability scores are scale-invariant, so this keeps them.
bool fit_contents(std::vector<ContentObject>& contents, const BoxSpec& box, double fill_fraction) {
  double total = 0.0;
  for (const auto& o : contents) total += o.bounding_volume();
  const double budget = fill_fraction * box.inner_volume();
  if (total > budget) {
    const double scale = std::cbrt(budget / total) * (1.0 - 1e-9);
    for (auto& o : contents) {
      o.w *= scale;
      o.d *= scale;
      o.h *= scale;
    }
  }
  return std::all_of(contents.begin(), contents.end(), [](const ContentObject& o) {
    return std::min({o.w, o.d, o.h}) >= kMinContentDim;
  });
}

}  // namespace

void validate(const GenConfig& cfg) {
  if (!(1 <= cfg.min_boxes && cfg.min_boxes <= cfg.max_boxes && cfg.max_boxes <= 8)) {
    throw std::invalid_argument("box count range must satisfy 1 <= min <= max <= 8");
  }
  if (!(0 <= cfg.min_objects && cfg.min_objects <= cfg.max_objects)) {
    throw std::invalid_argument("object count range must satisfy 0 <= min <= max");
  }
  if (cfg.box_densities.empty() || cfg.object_densities.empty()) {
    throw std::invalid_argument("density choice lists must not be empty");
  }
  for (double d : cfg.box_densities) {
    if (!(d > 0.0)) throw std::invalid_argument("box densities must be positive");
  }
  for (double d : cfg.object_densities) {
    if (!(d > 0.0)) throw std::invalid_argument("object densities must be positive");
  }
  check_range(cfg.box_wd, "box_wd");
  check_range(cfg.box_h, "box_h");
  if (!(cfg.fill_fraction > 0.0 && cfg.fill_fraction <= 1.0)) {
    throw std::invalid_argument("fill_fraction must be in (0, 1]");
  }
  if (!(cfg.wall > 0.0 && 2.0 * cfg.wall < std::min(cfg.box_wd.lo, cfg.box_h.lo))) {
    throw std::invalid_argument("wall thickness must fit the smallest box");
  }
  if (cfg.max_fit_retries < 1 || cfg.max_resamples < 1) {
    throw std::invalid_argument("retry limits must be positive");
  }
  if (cfg.max_resamples > (1 << 16)) {
    throw std::invalid_argument("max_resamples must be at most 65536");
  }
}

void to_json(nlohmann::json& j, const GenConfig& c) {
  j = nlohmann::json{{"box_count", {c.min_boxes, c.max_boxes}},
                     {"objects_per_box", {c.min_objects, c.max_objects}},
                     {"box_densities", c.box_densities},
                     {"object_densities", c.object_densities},
                     {"box_wd", {c.box_wd.lo, c.box_wd.hi}},
                     {"box_h", {c.box_h.lo, c.box_h.hi}},
                     {"fill_fraction", c.fill_fraction},
                     {"wall", c.wall},
                     {"master_seed", c.master_seed},
                     {"max_fit_retries", c.max_fit_retries},
                     {"max_resamples", c.max_resamples}};
}

void from_json(const nlohmann::json& j, GenConfig& c) {
  const GenConfig defaults;
  c = defaults;
  if (j.contains("box_count")) {
    c.min_boxes = j["box_count"].at(0).get<int>();
    c.max_boxes = j["box_count"].at(1).get<int>();
  }
  if (j.contains("objects_per_box")) {
    c.min_objects = j["objects_per_box"].at(0).get<int>();
    c.max_objects = j["objects_per_box"].at(1).get<int>();
  }
  c.box_densities = j.value("box_densities", defaults.box_densities);
  c.object_densities = j.value("object_densities", defaults.object_densities);
  if (j.contains("box_wd")) {
    c.box_wd = {j["box_wd"].at(0).get<double>(), j["box_wd"].at(1).get<double>()};
  }
  if (j.contains("box_h")) {
    c.box_h = {j["box_h"].at(0).get<double>(), j["box_h"].at(1).get<double>()};
  }
  c.fill_fraction = j.value("fill_fraction", defaults.fill_fraction);
  c.wall = j.value("wall", defaults.wall);
  c.master_seed = j.value("master_seed", defaults.master_seed);
  c.max_fit_retries = j.value("max_fit_retries", defaults.max_fit_retries);
  c.max_resamples = j.value("max_resamples", defaults.max_resamples);
  validate(c);
}

Scenario sample_scenario(const GenConfig& cfg, std::uint64_t index) {
  validate(cfg);
  Rng rng(combine_key(cfg.master_seed, index));

  Scenario scenario;
  scenario.id = "scn-" + std::to_string(index);
  scenario.seed = rng.next_u64();

  const int box_count = rng.between(cfg.min_boxes, cfg.max_boxes);
  for (int b = 0; b < box_count; ++b) {
    BoxSpec box;
    box.id = "box" + std::to_string(b + 1);
    box.w = rng.uniform(cfg.box_wd.lo, cfg.box_wd.hi);
    box.d = rng.uniform(cfg.box_wd.lo, cfg.box_wd.hi);
    box.h = rng.uniform(cfg.box_h.lo, cfg.box_h.hi);
    box.wall = cfg.wall;
    box.density = rng.pick(cfg.box_densities);

    const int object_count = rng.between(cfg.min_objects, cfg.max_objects);
    bool fitted = false;
    for (int attempt = 0; attempt < cfg.max_fit_retries && !fitted; ++attempt) {
      std::vector<ContentObject> contents;
      for (int o = 0; o < object_count; ++o) {
        contents.push_back(sample_object(cfg, box, rng));
      }
      if (fit_contents(contents, box, cfg.fill_fraction)) {
        box.contents = std::move(contents);
        fitted = true;
      }
    }
    if (!fitted) {
      throw GenExhausted("could not fit " + std::to_string(object_count) + " objects into " +
                         box.id + " of scenario " + scenario.id +
                         "; fill_fraction is too tight");
    }
    scenario.boxes.push_back(std::move(box));
  }

  scenario.reveal_order = scenario.box_ids();
  rng.shuffle(scenario.reveal_order);
  validate(scenario, cfg.fill_fraction);
  return scenario;
}

std::uint64_t slot_index(SampleStream stream, std::size_t set, std::size_t slot) {
  if (set >= (1u << 16) || slot >= (1u << 24)) {
    throw std::out_of_range("scenario slot out of range");
  }
  return (static_cast<std::uint64_t>(stream) << 56) | (static_cast<std::uint64_t>(set + 1) << 40) |
         (static_cast<std::uint64_t>(slot) << 16);
}

FeasibleScenario sample_feasible(const GenConfig& cfg, const PhysParams& params,
                                 const PreferenceSet& prefs, double threshold,
                                 std::uint64_t first_index, const CatalogCache* cache,
                                 std::size_t workers) {
  if (!(threshold >= 0.0)) {
    throw std::invalid_argument("feasibility threshold must be non-negative");
  }
  for (int attempt = 0; attempt < cfg.max_resamples; ++attempt) {
    const std::uint64_t index = first_index + static_cast<std::uint64_t>(attempt);
    Scenario scenario = sample_scenario(cfg, index);
    StackCatalog catalog = cache ? cache->load_or_build(scenario, params, workers)
                                 : enumerate_stacks(scenario, params, workers);
    if (catalog.completed.empty()) {
      continue;
    }
    ScoredStack best = best_achievable(catalog, prefs);
    if (best.score >= threshold) {
      return {std::move(scenario), std::move(catalog), std::move(best), index, attempt + 1};
    }
  }
  throw GenExhausted("no scenario reached the feasibility threshold " + std::to_string(threshold) +
                     " for preferences '" + prefs.to_string() + "' after " +
                     std::to_string(cfg.max_resamples) + " samples");
}

}  // namespace stacklab
