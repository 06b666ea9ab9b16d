#include "stacklab/stability_sim.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "stacklab/errors.hpp"
#include "stacklab/io.hpp"
#include "stacklab/parallel.hpp"
#include "stacklab/rng.hpp"

namespace stacklab {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

std::string_view to_string(AngleMode mode) {
  return mode == AngleMode::uniform_cap ? "uniform_cap" : "half_normal_sigma";
}

AngleMode angle_mode_from_string(std::string_view text) {
  if (text == "half_normal_sigma") return AngleMode::half_normal_sigma;
  if (text == "uniform_cap") return AngleMode::uniform_cap;
  throw std::invalid_argument("unknown angle mode: " + std::string(text));
}

}  // namespace

void validate(const PhysParams& p) {
  const double values[] = {p.placement_sigma, p.impulse_speed, p.impulse_angle_deg,
                           p.impulse_coeff,   p.support_inset, p.slosh_coeff};
  for (double v : values) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("physics parameters must be finite and non-negative");
    }
  }
  if (!(p.impulse_angle_deg < 90.0)) {
    throw std::invalid_argument("impulse angle must be below 90 degrees");
  }
}

void to_json(nlohmann::json& j, const PhysParams& p) {
  j = nlohmann::json{{"placement_sigma", p.placement_sigma},
                     {"impulse_speed", p.impulse_speed},
                     {"impulse_angle_deg", p.impulse_angle_deg},
                     {"angle_mode", to_string(p.angle_mode)},
                     {"impulse_coeff", p.impulse_coeff},
                     {"support_inset", p.support_inset},
                     {"slosh_coeff", p.slosh_coeff}};
}

void from_json(const nlohmann::json& j, PhysParams& p) {
  const PhysParams defaults;
  p.placement_sigma = j.value("placement_sigma", defaults.placement_sigma);
  p.impulse_speed = j.value("impulse_speed", defaults.impulse_speed);
  p.impulse_angle_deg = j.value("impulse_angle_deg", defaults.impulse_angle_deg);
  p.angle_mode = angle_mode_from_string(j.value("angle_mode", std::string("half_normal_sigma")));
  p.impulse_coeff = j.value("impulse_coeff", defaults.impulse_coeff);
  p.support_inset = j.value("support_inset", defaults.support_inset);
  p.slosh_coeff = j.value("slosh_coeff", defaults.slosh_coeff);
  validate(p);
}

std::string params_hash(const PhysParams& params) {
  return hex64(hash_bytes(nlohmann::json(params).dump()));
}

Disturbance sample_disturbance(std::uint64_t seed, const std::vector<std::string>& prefix,
                               const PhysParams& params) {
  if (prefix.empty()) {
    throw std::invalid_argument("sample_disturbance needs a non-empty prefix");
  }
  Rng rng(sequence_key(seed, prefix));
  // Fixed draw layout: offset x, offset y, angle normal, angle uniform, heading.
  const double ox = rng.normal();
  const double oy = rng.normal();
  const double angle_normal = rng.normal();
  const double angle_uniform = rng.uniform();
  const double heading = rng.uniform() * 2.0 * std::numbers::pi;

  double alpha_deg = params.angle_mode == AngleMode::uniform_cap
                         ? angle_uniform * params.impulse_angle_deg
                         : std::abs(angle_normal) * params.impulse_angle_deg;
  alpha_deg = std::min(alpha_deg, 90.0);
  const double shift =
      params.impulse_coeff * params.impulse_speed * std::sin(alpha_deg * kDegToRad);

  Disturbance d;
  d.offset = {params.placement_sigma * ox, params.placement_sigma * oy};
  d.impulse = {shift * std::cos(heading), shift * std::sin(heading)};
  return d;
}

std::vector<std::string> PhysStack::ids() const {
  std::vector<std::string> out;
  out.reserve(boxes.size());
  for (const auto& b : boxes) {
    out.push_back(b.id);
  }
  return out;
}

Vec2 PhysStack::position(std::size_t i) const {
  Vec2 pos;
  for (std::size_t k = 0; k <= i; ++k) {
    pos = pos + boxes[k].offset;
  }
  return pos;
}

std::optional<Rect> support_region(const BoxSpec& lower, Vec2 lower_pos, double upper_w,
                                   double upper_d, Vec2 upper_pos) {
  Rect r;
  r.xmin = std::max(lower_pos.x - lower.w / 2.0, upper_pos.x - upper_w / 2.0);
  r.xmax = std::min(lower_pos.x + lower.w / 2.0, upper_pos.x + upper_w / 2.0);
  r.ymin = std::max(lower_pos.y - lower.d / 2.0, upper_pos.y - upper_d / 2.0);
  r.ymax = std::min(lower_pos.y + lower.d / 2.0, upper_pos.y + upper_d / 2.0);
  if (r.width() <= 0.0 || r.depth() <= 0.0) {
    return std::nullopt;
  }
  return r;
}

StabilityResult check_stable(const PhysStack& stack, const Scenario& scenario,
                             const PhysParams& params) {
  const std::size_t n = stack.boxes.size();
  std::vector<Vec2> pos(n);
  std::vector<const BoxSpec*> spec(n);
  Vec2 acc;
  for (std::size_t k = 0; k < n; ++k) {
    acc = acc + stack.boxes[k].offset;
    pos[k] = acc;
    spec[k] = &scenario.box(stack.boxes[k].id);
  }

  // Interface 0 (table) always holds.
  for (std::size_t i = 1; i < n; ++i) {
    double mass = 0.0;
    double mx = 0.0;
    double my = 0.0;
    double stability_sum = 0.0;
    double min_side = std::numeric_limits<double>::infinity();
    for (std::size_t k = i; k < n; ++k) {
      const double m = stack.boxes[k].mass;
      mass += m;
      mx += m * pos[k].x;
      my += m * pos[k].y;
      stability_sum += box_stability(*spec[k]);
      min_side = std::min({min_side, spec[k]->w, spec[k]->d});
    }
    const Vec2 com{mx / mass, my / mass};
    const double mean_stability =
        std::clamp(stability_sum / static_cast<double>(n - i), 0.0, 1.0);
    const double slosh = params.slosh_coeff * (1.0 - mean_stability) * (min_side / 2.0);
    const double margin = params.support_inset + slosh;

    const auto region =
        support_region(*spec[i - 1], pos[i - 1], spec[i]->w, spec[i]->d, pos[i]);
    // A COM displaced by `slosh` in any direction stays inside the inset
    // rectangle iff it lies inside the rectangle shrunk by the full margin.
    if (!region || com.x < region->xmin + margin || com.x > region->xmax - margin ||
        com.y < region->ymin + margin || com.y > region->ymax - margin) {
      return {i};
    }
  }
  return {};
}

PlaceOutcome place_box(const PhysStack& stack, const std::string& box_id,
                       const Scenario& scenario, const PhysParams& params, std::uint64_t seed) {
  for (const auto& b : stack.boxes) {
    if (b.id == box_id) {
      throw std::invalid_argument("box " + box_id + " is already in the stack");
    }
  }
  const BoxSpec& spec = scenario.box(box_id);

  auto prefix = stack.ids();
  prefix.push_back(box_id);
  const Disturbance d = sample_disturbance(seed, prefix, params);

  double base_z = 0.0;
  if (!stack.boxes.empty()) {
    const auto& top = stack.boxes.back();
    base_z = top.base_z + scenario.box(top.id).h;
  }

  PhysStack next = stack;
  next.boxes.push_back({box_id, d.offset + d.impulse, box_weight(spec), base_z, base_z + spec.h / 2.0});
  const auto result = check_stable(next, scenario, params);
  if (!result.stable()) {
    return {std::nullopt, result.collapse_interface};
  }
  return {std::move(next), std::nullopt};
}

SimOutcome simulate_order(const Scenario& scenario, const std::vector<std::string>& order,
                          const PhysParams& params) {
  SimOutcome outcome;
  for (const auto& id : order) {
    auto placed = place_box(outcome.stack, id, scenario, params);
    if (!placed.ok()) {
      return outcome;
    }
    outcome.stack = std::move(*placed.stack);
  }
  outcome.completed = outcome.stack.boxes.size() == scenario.boxes.size();
  return outcome;
}

std::vector<Sequence> StackCatalog::prefixes_with_set(const std::set<std::string>& boxes) const {
  std::vector<Sequence> out;
  for (const auto& [seq, stack] : stable_prefixes) {
    if (seq.size() == boxes.size() && std::set<std::string>(seq.begin(), seq.end()) == boxes) {
      out.push_back(seq);
    }
  }
  return out;
}

namespace {

struct Branch {
  std::vector<std::pair<Sequence, PhysStack>> prefixes;
  std::vector<Sequence> completed;
};

void explore(const PhysStack& stack, std::vector<std::string>& remaining,
             const Scenario& scenario, const PhysParams& params, Branch& out) {
  for (std::size_t i = 0; i < remaining.size(); ++i) {
    const std::string id = remaining[i];
    auto placed = place_box(stack, id, scenario, params);
    if (!placed.ok()) {
      continue;
    }
    auto seq = placed.stack->ids();
    if (remaining.size() == 1) {
      out.completed.push_back(seq);
    }
    out.prefixes.emplace_back(std::move(seq), *placed.stack);

    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(i));
    explore(*placed.stack, remaining, scenario, params, out);
    remaining.insert(remaining.begin() + static_cast<std::ptrdiff_t>(i), id);
  }
}

}  // namespace

StackCatalog enumerate_stacks(const Scenario& scenario, const PhysParams& params,
                              std::size_t workers) {
  validate(params);
  auto ids = scenario.box_ids();
  std::sort(ids.begin(), ids.end());

  std::vector<Branch> branches(ids.size());
  parallel_for(ids.size(), workers, [&](std::size_t b) {
    auto placed = place_box(PhysStack{}, ids[b], scenario, params);
    if (!placed.ok()) {
      return;
    }
    Branch& out = branches[b];
    out.prefixes.emplace_back(placed.stack->ids(), *placed.stack);
    if (ids.size() == 1) {
      out.completed.push_back(placed.stack->ids());
    }
    std::vector<std::string> remaining;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (k != b) remaining.push_back(ids[k]);
    }
    explore(*placed.stack, remaining, scenario, params, out);
  });

  StackCatalog catalog;
  catalog.scenario_id = scenario.id;
  catalog.params_hash = params_hash(params);
  catalog.seed = scenario.seed;
  catalog.box_count = scenario.boxes.size();
  catalog.props = ground_truth_properties(scenario);
  for (auto& branch : branches) {
    for (auto& [seq, stack] : branch.prefixes) {
      catalog.stable_prefixes.emplace(std::move(seq), std::move(stack));
    }
    for (auto& seq : branch.completed) {
      catalog.completed.push_back(std::move(seq));
    }
  }
  std::sort(catalog.completed.begin(), catalog.completed.end());
  return catalog;
}

void check_closure(const StackCatalog& catalog) {
  auto require_prefixes = [&](const Sequence& seq) {
    for (std::size_t len = 1; len <= seq.size(); ++len) {
      const Sequence prefix(seq.begin(), seq.begin() + static_cast<std::ptrdiff_t>(len));
      if (!catalog.is_stable_prefix(prefix)) {
        throw BrokenCatalog("catalog " + catalog.scenario_id + " is missing a prefix of length " +
                            std::to_string(len));
      }
    }
  };
  for (const auto& seq : catalog.completed) {
    if (seq.size() != catalog.box_count) {
      throw BrokenCatalog("catalog " + catalog.scenario_id + " has an incomplete entry in A_S");
    }
    require_prefixes(seq);
  }
  for (const auto& [seq, stack] : catalog.stable_prefixes) {
    require_prefixes(seq);
  }
}

void to_json(nlohmann::json& j, const StackCatalog& c) {
  nlohmann::json prefixes = nlohmann::json::array();
  for (const auto& [seq, stack] : c.stable_prefixes) {
    nlohmann::json boxes = nlohmann::json::array();
    for (const auto& b : stack.boxes) {
      boxes.push_back({{"id", b.id},
                       {"x", b.offset.x},
                       {"y", b.offset.y},
                       {"mass", b.mass},
                       {"base_z", b.base_z},
                       {"com_z", b.com_z}});
    }
    prefixes.push_back(std::move(boxes));
  }
  j = nlohmann::json{{"scenario_id", c.scenario_id},
                     {"params_hash", c.params_hash},
                     {"seed", c.seed},
                     {"box_count", c.box_count},
                     {"properties", c.props},
                     {"stable_prefixes", std::move(prefixes)},
                     {"completed", c.completed}};
}

void from_json(const nlohmann::json& j, StackCatalog& c) {
  j.at("scenario_id").get_to(c.scenario_id);
  j.at("params_hash").get_to(c.params_hash);
  j.at("seed").get_to(c.seed);
  j.at("box_count").get_to(c.box_count);
  j.at("properties").get_to(c.props);
  c.stable_prefixes.clear();
  for (const auto& boxes : j.at("stable_prefixes")) {
    PhysStack stack;
    for (const auto& b : boxes) {
      stack.boxes.push_back({b.at("id").get<std::string>(),
                             {b.at("x").get<double>(), b.at("y").get<double>()},
                             b.at("mass").get<double>(),
                             b.at("base_z").get<double>(),
                             b.at("com_z").get<double>()});
    }
    c.stable_prefixes.emplace(stack.ids(), std::move(stack));
  }
  j.at("completed").get_to(c.completed);
}

std::string catalog_digest(const StackCatalog& catalog) {
  return hex64(hash_bytes(nlohmann::json(catalog).dump()));
}

std::string CatalogCache::path_for(const Scenario& scenario, const PhysParams& params) const {
  const auto scenario_digest = hex64(hash_bytes(nlohmann::json(scenario).dump()));
  return (std::filesystem::path(dir_) /
          (scenario.id + "-" + params_hash(params) + "-" + scenario_digest.substr(0, 8) + ".json"))
      .string();
}

StackCatalog CatalogCache::load_or_build(const Scenario& scenario, const PhysParams& params,
                                         std::size_t workers) const {
  if (!enabled_) {
    return enumerate_stacks(scenario, params, workers);
  }
  const auto path = path_for(scenario, params);
  if (std::filesystem::exists(path)) {
    try {
      auto catalog = read_json_file(path).get<StackCatalog>();
      if (catalog.scenario_id == scenario.id && catalog.params_hash == params_hash(params) &&
          catalog.seed == scenario.seed) {
        check_closure(catalog);
        return catalog;
      }
    } catch (const Error&) {
      // Unreadable or inconsistent cache entries are rebuilt below.
    } catch (const nlohmann::json::exception&) {
    }
  }
  auto catalog = enumerate_stacks(scenario, params, workers);
  write_json_file(path, nlohmann::json(catalog));
  return catalog;
}

}  // namespace stacklab
