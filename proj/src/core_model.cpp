#include "stacklab/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "stacklab/errors.hpp"
#include "stacklab/io.hpp"
#include "stacklab/rng.hpp"

namespace stacklab {

std::string_view to_string(Shape shape) {
  switch (shape) {
    case Shape::sphere:
      return "sphere";
    case Shape::cuboid:
      return "cuboid";
    case Shape::cylinder:
      return "cylinder";
  }
  return "cuboid";
}

Shape shape_from_string(std::string_view text) {
  if (text == "sphere") return Shape::sphere;
  if (text == "cuboid") return Shape::cuboid;
  if (text == "cylinder") return Shape::cylinder;
  throw std::invalid_argument("unknown shape: " + std::string(text));
}

ContentObject ContentObject::sphere(double diameter, double density) {
  ContentObject o{Shape::sphere, diameter, diameter, diameter, density};
  validate(o);
  return o;
}

ContentObject ContentObject::cuboid(double w, double d, double h, double density) {
  ContentObject o{Shape::cuboid, w, d, h, density};
  validate(o);
  return o;
}

ContentObject ContentObject::cylinder(double diameter, double h, double density) {
  ContentObject o{Shape::cylinder, diameter, diameter, h, density};
  validate(o);
  return o;
}

double ContentObject::volume() const {
  switch (shape) {
    case Shape::sphere:
      return std::numbers::pi / 6.0 * w * w * w;
    case Shape::cylinder:
      return std::numbers::pi / 4.0 * w * w * h;
    case Shape::cuboid:
      break;
  }
  return w * d * h;
}

void validate(const ContentObject& o) {
  if (!(o.w > 0.0 && o.d > 0.0 && o.h > 0.0)) {
    throw std::invalid_argument("content dimensions must be positive");
  }
  if (!(o.density > 0.0)) {
    throw std::invalid_argument("content density must be positive");
  }
  if (o.shape != Shape::cuboid && o.w != o.d) {
    throw std::invalid_argument("round content must have w == d");
  }
  if (o.shape == Shape::sphere && o.h != o.w) {
    throw std::invalid_argument("sphere must have w == d == h");
  }
}

void validate(const BoxSpec& box, double fill_fraction) {
  if (box.id.empty()) {
    throw std::invalid_argument("box id must not be empty");
  }
  if (!(box.wall > 0.0 && 2.0 * box.wall < std::min({box.w, box.d, box.h}))) {
    throw std::invalid_argument("box " + box.id + ": wall thickness must satisfy 0 < 2t < min(w, d, h)");
  }
  if (!(box.density > 0.0)) {
    throw std::invalid_argument("box " + box.id + ": density must be positive");
  }
  double bounding = 0.0;
  for (const auto& o : box.contents) {
    validate(o);
    if (o.w > box.inner_w() || o.d > box.inner_d() || o.h > box.inner_h()) {
      throw std::invalid_argument("box " + box.id + ": content does not fit the inner cavity");
    }
    bounding += o.bounding_volume();
  }
  if (bounding > fill_fraction * box.inner_volume()) {
    throw std::invalid_argument("box " + box.id + ": contents exceed the fill fraction");
  }
}

const BoxSpec& Scenario::box(std::string_view box_id) const {
  for (const auto& b : boxes) {
    if (b.id == box_id) {
      return b;
    }
  }
  throw std::out_of_range("scenario " + id + " has no box " + std::string(box_id));
}

std::vector<std::string> Scenario::box_ids() const {
  std::vector<std::string> ids;
  ids.reserve(boxes.size());
  for (const auto& b : boxes) {
    ids.push_back(b.id);
  }
  return ids;
}

void validate(const Scenario& scenario, double fill_fraction) {
  std::set<std::string> ids;
  for (const auto& b : scenario.boxes) {
    validate(b, fill_fraction);
    if (!ids.insert(b.id).second) {
      throw std::invalid_argument("duplicate box id " + b.id);
    }
  }
  if (ids.empty()) {
    throw std::invalid_argument("scenario has no boxes");
  }
  std::set<std::string> revealed(scenario.reveal_order.begin(), scenario.reveal_order.end());
  if (revealed != ids || scenario.reveal_order.size() != ids.size()) {
    throw std::invalid_argument("reveal_order must be a permutation of the box ids");
  }
}

StackState StackState::all_on_table(const Scenario& scenario) {
  StackState state;
  for (const auto& b : scenario.boxes) {
    state.on_table.insert(b.id);
  }
  return state;
}

std::string to_string(const Action& action) {
  switch (action.kind) {
    case Action::Kind::stack:
      return "stack " + action.box;
    case Action::Kind::unstack:
      return "unstack " + action.box;
    case Action::Kind::wait:
      break;
  }
  return "wait";
}

double object_stability(const ContentObject& object) {
  if (object.shape == Shape::sphere) {
    return 0.0;
  }
  return std::min(object.w, object.d) / object.h;
}

double box_stability(const BoxSpec& box) {
  if (box.contents.empty()) {
    return 1.0;
  }
  double sum = 0.0;
  for (const auto& o : box.contents) {
    sum += object_stability(o);
  }
  return sum / static_cast<double>(box.contents.size());
}

double box_weight(const BoxSpec& box) {
  double mass = (box.outer_volume() - box.inner_volume()) * box.density;
  for (const auto& o : box.contents) {
    mass += o.mass();
  }
  return mass;
}

Measurement measure(const BoxSpec& box, const NoiseConfig& noise, std::uint64_t rng_key) {
  Rng rng(rng_key);
  // Both variates are always drawn so each stream position has a fixed meaning.
  const double weight_eps = rng.normal();
  const double stability_eps = rng.normal();

  Measurement m;
  m.box_id = box.id;
  m.weight_kg = box_weight(box);
  if (noise.weight_sigma > 0.0) {
    // weight_kg > 0 holds even for extreme draws.
    m.weight_kg *= std::max(1.0 + noise.weight_sigma * weight_eps, 1e-6);
  }
  m.stability_audio = std::clamp(box_stability(box), 0.0, 1.0);
  if (noise.stability_sigma > 0.0) {
    m.stability_audio =
        std::clamp(m.stability_audio + noise.stability_sigma * stability_eps, 0.0, 1.0);
  }
  return m;
}

BoxProperties ground_truth_properties(const BoxSpec& box) {
  return {box_weight(box), box.outer_volume(), box.footprint(),
          std::clamp(box_stability(box), 0.0, 1.0)};
}

PropertyTable ground_truth_properties(const Scenario& scenario) {
  PropertyTable table;
  for (const auto& b : scenario.boxes) {
    table.emplace(b.id, ground_truth_properties(b));
  }
  return table;
}

StackState apply_action(const StackState& state, const Action& action) {
  StackState next = state;
  switch (action.kind) {
    case Action::Kind::wait:
      return next;
    case Action::Kind::stack:
      if (!next.on_table.contains(action.box)) {
        throw IllegalAction("cannot stack " + action.box + ": not on the table");
      }
      next.on_table.erase(action.box);
      next.stacked.push_back(action.box);
      return next;
    case Action::Kind::unstack:
      if (next.stacked.empty() || next.stacked.back() != action.box) {
        throw IllegalAction("cannot unstack " + action.box + ": not the top box");
      }
      next.stacked.pop_back();
      next.on_table.insert(action.box);
      return next;
  }
  return next;
}

std::vector<Action> conversion_actions(const std::vector<std::string>& from,
                                       const std::vector<std::string>& to) {
  std::size_t common = 0;
  while (common < from.size() && common < to.size() && from[common] == to[common]) {
    ++common;
  }
  std::vector<Action> actions;
  for (std::size_t i = from.size(); i > common; --i) {
    actions.push_back(Action::unstack(from[i - 1]));
  }
  for (std::size_t i = common; i < to.size(); ++i) {
    actions.push_back(Action::stack(to[i]));
  }
  return actions;
}

void to_json(nlohmann::json& j, const ContentObject& o) {
  j = nlohmann::json{{"shape", to_string(o.shape)},
                     {"w", o.w},
                     {"d", o.d},
                     {"h", o.h},
                     {"density", o.density}};
}

void from_json(const nlohmann::json& j, ContentObject& o) {
  o.shape = shape_from_string(j.at("shape").get<std::string>());
  j.at("w").get_to(o.w);
  j.at("d").get_to(o.d);
  j.at("h").get_to(o.h);
  j.at("density").get_to(o.density);
}

void to_json(nlohmann::json& j, const BoxSpec& b) {
  j = nlohmann::json{{"id", b.id},     {"w", b.w},
                     {"d", b.d},       {"h", b.h},
                     {"wall", b.wall}, {"density", b.density},
                     {"contents", b.contents}};
}

void from_json(const nlohmann::json& j, BoxSpec& b) {
  j.at("id").get_to(b.id);
  j.at("w").get_to(b.w);
  j.at("d").get_to(b.d);
  j.at("h").get_to(b.h);
  b.wall = j.value("wall", kDefaultWallThickness);
  j.at("density").get_to(b.density);
  b.contents = j.value("contents", std::vector<ContentObject>{});
}

void to_json(nlohmann::json& j, const Scenario& s) {
  j = nlohmann::json{{"id", s.id},
                     {"seed", s.seed},
                     {"boxes", s.boxes},
                     {"reveal_order", s.reveal_order}};
}

void from_json(const nlohmann::json& j, Scenario& s) {
  j.at("id").get_to(s.id);
  j.at("seed").get_to(s.seed);
  j.at("boxes").get_to(s.boxes);
  j.at("reveal_order").get_to(s.reveal_order);
}

void to_json(nlohmann::json& j, const Measurement& m) {
  j = nlohmann::json{
      {"box_id", m.box_id}, {"weight_kg", m.weight_kg}, {"stability_audio", m.stability_audio}};
}

void to_json(nlohmann::json& j, const BoxProperties& p) {
  j = nlohmann::json{{"weight", p.weight},
                     {"size", p.size},
                     {"footprint", p.footprint},
                     {"stability", p.stability}};
}

void from_json(const nlohmann::json& j, BoxProperties& p) {
  j.at("weight").get_to(p.weight);
  j.at("size").get_to(p.size);
  j.at("footprint").get_to(p.footprint);
  j.at("stability").get_to(p.stability);
}

Scenario load_scenario(const std::string& path) {
  const auto j = read_json_file(path);
  try {
    auto scenario = j.get<Scenario>();
    validate(scenario);
    return scenario;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path, std::string("not a scenario: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw IoError(path, std::string("invalid scenario: ") + e.what());
  }
}

void save_scenario(const Scenario& scenario, const std::string& path) {
  write_json_file(path, nlohmann::json(scenario));
}

}  // namespace stacklab
