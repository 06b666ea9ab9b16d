#include "stacklab/agents.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "stacklab/errors.hpp"
#include "stacklab/io.hpp"
#include "stacklab/rng.hpp"

namespace stacklab {

std::string_view to_string(Mode mode) { return mode == Mode::offline ? "offline" : "online"; }

Mode mode_from_string(std::string_view text) {
  if (text == "offline") return Mode::offline;
  if (text == "online") return Mode::online;
  throw std::invalid_argument("unknown mode: " + std::string(text));
}

const BoxObservation& Observation::box(std::string_view id) const {
  for (const auto& b : boxes) {
    if (b.id == id) return b;
  }
  throw std::out_of_range("observation has no box " + std::string(id));
}

Observation make_observation(const Scenario& scenario, const PreferenceSet& prefs,
                             std::string preference_text, Mode mode, std::size_t revealed_count,
                             const StackState& state, const NoiseConfig& noise,
                             std::uint64_t noise_key) {
  if (revealed_count > scenario.reveal_order.size()) {
    throw std::invalid_argument("cannot reveal more boxes than the scenario has");
  }
  Observation obs;
  obs.mode = mode;
  obs.prefs = prefs;
  obs.preference_text = std::move(preference_text);
  obs.state = state;
  obs.revealed.assign(scenario.reveal_order.begin(),
                      scenario.reveal_order.begin() + static_cast<std::ptrdiff_t>(revealed_count));
  if (mode == Mode::online && revealed_count > 0) obs.new_box = obs.revealed.back();

  for (const auto& spec : scenario.boxes) {
    BoxObservation b{spec.id, spec.w, spec.d, spec.h, std::nullopt};
    if (std::find(obs.revealed.begin(), obs.revealed.end(), spec.id) != obs.revealed.end()) {
      b.measurement = measure(spec, noise, combine_key(noise_key, hash_bytes(spec.id)));
    }
    obs.boxes.push_back(std::move(b));
  }
  return obs;
}

std::string render_stack(const std::vector<std::string>& stack) {
  if (stack.empty()) return "empty";
  std::string out;
  for (const auto& id : stack) {
    if (!out.empty()) out += ", ";
    out += id;
  }
  return out;
}

std::string render_observation(const Observation& obs) {
  std::string out;
  if (obs.new_box) out += "new measurement: " + *obs.new_box + "\n";
  for (const auto& b : obs.boxes) {
    out += b.id + ": ";
    if (b.measurement) {
      out += "weight " + format_fixed(b.measurement->weight_kg, 2) + " kg, stability " +
             format_fixed(b.measurement->stability_audio, 2) + ", ";
    } else {
      out += "not measured, ";
    }
    out += "size " + format_fixed(b.w * 100.0, 1) + "x" + format_fixed(b.d * 100.0, 1) + "x" +
           format_fixed(b.h * 100.0, 1) + " cm, footprint " +
           format_fixed(std::round(b.w * b.d * 1e4), 0) + " cm^2\n";
  }
  out += "current stack: " + render_stack(obs.state.stacked) + "\n";
  out += "preference: " + obs.preference_text;
  return out;
}

OracleAgent::OracleAgent(const StackCatalog& catalog, const PreferenceSet& prefs)
    : target_(best_achievable(catalog, prefs).stack) {}

Plan OracleAgent::plan(const Observation& obs) {
  Sequence goal;
  for (const auto& id : target_) {
    if (obs.mode == Mode::online &&
        std::find(obs.revealed.begin(), obs.revealed.end(), id) == obs.revealed.end()) {
      break;
    }
    goal.push_back(id);
  }
  return make_plan(conversion_actions(obs.state.stacked, goal));
}

namespace {

double observed_key(const BoxObservation& b, PreferenceKind kind) {
  switch (kind) {
    case PreferenceKind::weight:
      return b.measurement->weight_kg;
    case PreferenceKind::stability:
      return b.measurement->stability_audio;
    case PreferenceKind::size:
      return b.w * b.d * b.h;
    case PreferenceKind::footprint:
      return b.w * b.d;
  }
  return 0.0;
}

}  // namespace

Plan GreedyAgent::plan(const Observation& obs) {
  std::vector<const BoxObservation*> known;
  for (const auto& b : obs.boxes) {
    if (b.measurement) known.push_back(&b);
  }
  if (known.size() < 2 && known.size() < obs.boxes.size()) return Plan::wait();

  // Rank sums order the same way as mean ranks and compare exactly.
  std::vector<std::size_t> rank_sum(known.size(), 0);
  for (const auto& p : obs.prefs.items()) {
    std::vector<std::size_t> order(known.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    const bool descending = p.direction == Direction::descending_from_bottom;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const double ka = observed_key(*known[a], p.kind);
      const double kb = observed_key(*known[b], p.kind);
      return descending ? ka > kb : ka < kb;
    });
    for (std::size_t r = 0; r < order.size(); ++r) {
      rank_sum[order[r]] += r;
    }
  }

  std::vector<std::size_t> order(known.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rank_sum[a] < rank_sum[b]; });
  Sequence target;
  for (auto i : order) target.push_back(known[i]->id);
  return make_plan(conversion_actions(obs.state.stacked, target));
}

Plan RandomAgent::plan(const Observation& obs) {
  if (!obs.all_revealed()) return Plan::wait();
  if (!order_) {
    Sequence ids;
    for (const auto& b : obs.boxes) ids.push_back(b.id);
    Rng rng(seed_);
    rng.shuffle(ids);
    order_ = std::move(ids);
  }
  return make_plan(conversion_actions(obs.state.stacked, *order_));
}

Plan ScriptedAgent::plan(const Observation&) {
  if (next_ >= replies_.size()) return Plan::wait();
  return parse_plan(replies_[next_++]);
}

}  // namespace stacklab
