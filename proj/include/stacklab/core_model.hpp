#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace stacklab {

enum class Shape { sphere, cuboid, cylinder };

std::string_view to_string(Shape shape);
Shape shape_from_string(std::string_view text);

/// A rigid object inside a box. Dimensions are in meters, density in kg/m^3.
/// Spheres have w == d == h == diameter; cylinders have w == d == diameter.
struct ContentObject {
  Shape shape = Shape::cuboid;
  double w = 0.0;
  double d = 0.0;
  double h = 0.0;
  double density = 0.0;

  static ContentObject sphere(double diameter, double density);
  static ContentObject cuboid(double w, double d, double h, double density);
  static ContentObject cylinder(double diameter, double h, double density);

  double volume() const;
  double mass() const { return volume() * density; }
  /// Axis-aligned bounding volume.
  double bounding_volume() const { return w * d * h; }

  bool operator==(const ContentObject&) const = default;
};

/// Throws std::invalid_argument when an object violates its invariants.
void validate(const ContentObject& object);

inline constexpr double kDefaultWallThickness = 0.005;

/// A closed cuboid box with hidden contents.
struct BoxSpec {
  std::string id;
  double w = 0.0;
  double d = 0.0;
  double h = 0.0;
  double wall = kDefaultWallThickness;
  double density = 0.0;
  std::vector<ContentObject> contents;

  double inner_w() const { return w - 2.0 * wall; }
  double inner_d() const { return d - 2.0 * wall; }
  double inner_h() const { return h - 2.0 * wall; }
  double inner_volume() const { return inner_w() * inner_d() * inner_h(); }
  double outer_volume() const { return w * d * h; }
  double footprint() const { return w * d; }

  bool operator==(const BoxSpec&) const = default;
};

/// Checks wall thickness, per-object fit and the total bounding volume
/// against fill_fraction times the inner volume.
void validate(const BoxSpec& box, double fill_fraction = 1.0);

struct Scenario {
  std::string id;
  std::uint64_t seed = 0;
  std::vector<BoxSpec> boxes;
  /// Order in which latent properties are measured in online mode.
  std::vector<std::string> reveal_order;

  const BoxSpec& box(std::string_view box_id) const;
  std::vector<std::string> box_ids() const;

  bool operator==(const Scenario&) const = default;
};

void validate(const Scenario& scenario, double fill_fraction = 1.0);

/// Boxes bottom-to-top plus the boxes still on the table.
struct StackState {
  std::vector<std::string> stacked;
  std::set<std::string> on_table;

  static StackState all_on_table(const Scenario& scenario);
  bool complete() const { return on_table.empty(); }

  bool operator==(const StackState&) const = default;
};

struct Action {
  enum class Kind { stack, unstack, wait };

  Kind kind = Kind::wait;
  std::string box;

  static Action stack(std::string box) { return {Kind::stack, std::move(box)}; }
  static Action unstack(std::string box) { return {Kind::unstack, std::move(box)}; }
  static Action wait() { return {Kind::wait, {}}; }

  bool operator==(const Action&) const = default;
};

std::string to_string(const Action& action);

struct Measurement {
  std::string box_id;
  double weight_kg = 0.0;
  double stability_audio = 0.0;

  bool operator==(const Measurement&) const = default;
};

/// Sensor noise. Weight noise is relative (weight * (1 + eps)), stability
/// noise is additive before re-clamping. Both default to off.
struct NoiseConfig {
  double weight_sigma = 0.0;
  double stability_sigma = 0.0;
};

/// min(w, d) / h; spheres score exactly 0.
double object_stability(const ContentObject& object);

/// Mean object stability of the contents; an empty box scores 1.
double box_stability(const BoxSpec& box);

/// Shell mass plus content mass, in kg.
double box_weight(const BoxSpec& box);

Measurement measure(const BoxSpec& box, const NoiseConfig& noise, std::uint64_t rng_key);

/// Sort keys of a box. Stability is the clamped box_stability.
struct BoxProperties {
  double weight = 0.0;
  double size = 0.0;
  double footprint = 0.0;
  double stability = 0.0;

  bool operator==(const BoxProperties&) const = default;
};

using PropertyTable = std::map<std::string, BoxProperties>;

BoxProperties ground_truth_properties(const BoxSpec& box);
PropertyTable ground_truth_properties(const Scenario& scenario);

/// Throws IllegalAction when the action is not legal in `state`.
StackState apply_action(const StackState& state, const Action& action);

/// Actions that turn stack `from` into stack `to`: pop down to the longest
/// common prefix, then push the rest of `to`.
std::vector<Action> conversion_actions(const std::vector<std::string>& from,
                                       const std::vector<std::string>& to);

// JSON (de)serialization. Field names are frozen; see docs/formats.md.
void to_json(nlohmann::json& j, const ContentObject& object);
void from_json(const nlohmann::json& j, ContentObject& object);
void to_json(nlohmann::json& j, const BoxSpec& box);
void from_json(const nlohmann::json& j, BoxSpec& box);
void to_json(nlohmann::json& j, const Scenario& scenario);
void from_json(const nlohmann::json& j, Scenario& scenario);
void to_json(nlohmann::json& j, const Measurement& m);
void to_json(nlohmann::json& j, const BoxProperties& p);
void from_json(const nlohmann::json& j, BoxProperties& p);

Scenario load_scenario(const std::string& path);
void save_scenario(const Scenario& scenario, const std::string& path);

}  // namespace stacklab
