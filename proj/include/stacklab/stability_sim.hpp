#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stacklab/core_model.hpp"

namespace stacklab {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  bool operator==(const Vec2&) const = default;
};

/// How the impulse deviation angle parameter is read: as the standard
/// deviation of a half-normal, or as a hard cap on a uniform draw.
enum class AngleMode { half_normal_sigma, uniform_cap };

/// Quasi-static placement model parameters. Lengths in meters.
struct PhysParams {
  double placement_sigma = 0.02;
  double impulse_speed = 0.4;           ///< m/s
  double impulse_angle_deg = 13.0;
  AngleMode angle_mode = AngleMode::half_normal_sigma;
  double impulse_coeff = 0.05;          ///< s; lateral shift = coeff * v * sin(alpha)
  double support_inset = 0.005;
  double slosh_coeff = 0.25;

  bool operator==(const PhysParams&) const = default;
};

void validate(const PhysParams& params);
void to_json(nlohmann::json& j, const PhysParams& p);
void from_json(const nlohmann::json& j, PhysParams& p);

/// Hex digest of the canonical parameter encoding.
std::string params_hash(const PhysParams& params);

struct Disturbance {
  Vec2 offset;   ///< Gaussian placement error.
  Vec2 impulse;  ///< Lateral shift caused by the off-vertical landing impulse.
};

/// Disturbance for placing prefix.back() on top of the rest of `prefix`.
/// Keyed by (seed, prefix) only, so the same prefix always lands the same way.
Disturbance sample_disturbance(std::uint64_t seed, const std::vector<std::string>& prefix,
                               const PhysParams& params);

struct PlacedBox {
  std::string id;
  Vec2 offset;  ///< Relative to the center of the box below (or the table origin).
  double mass = 0.0;
  double base_z = 0.0;
  double com_z = 0.0;

  bool operator==(const PlacedBox&) const = default;
};

struct PhysStack {
  std::vector<PlacedBox> boxes;  // bottom to top

  std::vector<std::string> ids() const;
  /// Absolute planar center of box i.
  Vec2 position(std::size_t i) const;

  bool operator==(const PhysStack&) const = default;
};

struct Rect {
  double xmin = 0.0;
  double xmax = 0.0;
  double ymin = 0.0;
  double ymax = 0.0;

  double width() const { return xmax - xmin; }
  double depth() const { return ymax - ymin; }
  Vec2 center() const { return {(xmin + xmax) / 2.0, (ymin + ymax) / 2.0}; }
};

/// Contact patch between the top face of `lower` and the bottom face of an
/// upper footprint, both axis-aligned and centered at the given positions.
std::optional<Rect> support_region(const BoxSpec& lower, Vec2 lower_pos, double upper_w,
                                   double upper_d, Vec2 upper_pos);

/// Result of a stability check. Interface i sits between box i-1 and box i;
/// interface 0 is the table, which never fails.
struct StabilityResult {
  std::optional<std::size_t> collapse_interface;

  bool stable() const { return !collapse_interface.has_value(); }
};

StabilityResult check_stable(const PhysStack& stack, const Scenario& scenario,
                             const PhysParams& params);

struct PlaceOutcome {
  std::optional<PhysStack> stack;
  std::optional<std::size_t> collapse_interface;

  bool ok() const { return stack.has_value(); }
};

/// Places `box_id` on top with the disturbance keyed by `seed` and the new
/// prefix, then checks the whole stack. The input stack is never modified.
PlaceOutcome place_box(const PhysStack& stack, const std::string& box_id,
                       const Scenario& scenario, const PhysParams& params, std::uint64_t seed);

inline PlaceOutcome place_box(const PhysStack& stack, const std::string& box_id,
                              const Scenario& scenario, const PhysParams& params) {
  return place_box(stack, box_id, scenario, params, scenario.seed);
}

struct SimOutcome {
  bool completed = false;
  PhysStack stack;  ///< The longest stable prefix that was built.

  std::size_t stable_prefix_length() const { return stack.boxes.size(); }
};

SimOutcome simulate_order(const Scenario& scenario, const std::vector<std::string>& order,
                          const PhysParams& params);

using Sequence = std::vector<std::string>;

/// Every stable prefix and completed stable stack of a scenario.
struct StackCatalog {
  std::string scenario_id;
  std::string params_hash;
  std::uint64_t seed = 0;
  std::size_t box_count = 0;
  PropertyTable props;
  std::map<Sequence, PhysStack> stable_prefixes;
  std::vector<Sequence> completed;  ///< A_S, sorted lexicographically.

  bool is_stable_prefix(const Sequence& seq) const { return stable_prefixes.contains(seq); }
  /// Stable prefixes whose box set equals `boxes`, in lexicographic order.
  std::vector<Sequence> prefixes_with_set(const std::set<std::string>& boxes) const;

  bool operator==(const StackCatalog&) const = default;
};

/// Explores all K! orders through a prefix tree, simulating each shared
/// prefix once. `workers` > 1 splits the tree by bottom box; the result does
/// not depend on it.
StackCatalog enumerate_stacks(const Scenario& scenario, const PhysParams& params,
                              std::size_t workers = 1);

/// Throws BrokenCatalog if a completed stack or a prefix misses one of its prefixes.
void check_closure(const StackCatalog& catalog);

void to_json(nlohmann::json& j, const StackCatalog& catalog);
void from_json(const nlohmann::json& j, StackCatalog& catalog);

/// Hex digest of the canonical catalog JSON.
std::string catalog_digest(const StackCatalog& catalog);

/// On-disk catalog cache keyed by scenario id, scenario content and physics
/// parameters.
class CatalogCache {
 public:
  explicit CatalogCache(std::string dir, bool enabled = true)
      : dir_(std::move(dir)), enabled_(enabled) {}

  StackCatalog load_or_build(const Scenario& scenario, const PhysParams& params,
                             std::size_t workers = 1) const;

  std::string path_for(const Scenario& scenario, const PhysParams& params) const;

 private:
  std::string dir_;
  bool enabled_;
};

}  // namespace stacklab
