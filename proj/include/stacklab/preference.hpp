#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stacklab/core_model.hpp"
#include "stacklab/stability_sim.hpp"

namespace stacklab {

enum class PreferenceKind { weight, size, footprint, stability };

/// Sequences run bottom-to-top, so descending_from_bottom puts the largest
/// key at the bottom.
enum class Direction { descending_from_bottom, ascending_from_bottom };

std::string_view to_string(PreferenceKind kind);
PreferenceKind preference_kind_from_string(std::string_view text);

struct Preference {
  PreferenceKind kind = PreferenceKind::weight;
  Direction direction = Direction::descending_from_bottom;

  /// Weight and stability need interaction to observe; size and footprint
  /// are visible.
  bool latent() const {
    return kind == PreferenceKind::weight || kind == PreferenceKind::stability;
  }
  bool apparent() const { return !latent(); }

  double key(const BoxProperties& props) const;

  bool operator==(const Preference&) const = default;
};

/// Non-empty list of preferences with unique kinds, scored by their
/// unweighted mean.
class PreferenceSet {
 public:
  PreferenceSet() = default;
  explicit PreferenceSet(std::vector<Preference> prefs);

  /// Parses "weight,stability" or "weight:asc,size:desc".
  static PreferenceSet parse(std::string_view text);

  const std::vector<Preference>& items() const { return prefs_; }
  std::size_t size() const { return prefs_.size(); }
  bool empty() const { return prefs_.empty(); }

  PreferenceSet apparent() const;
  bool has_apparent() const;

  /// Canonical text form, e.g. "weight,size"; ascending members get ":asc".
  std::string to_string() const;
  /// Human label, e.g. "Weight & Size".
  std::string label() const;

  bool operator==(const PreferenceSet&) const = default;

 private:
  std::vector<Preference> prefs_;
};

/// The five preference sets evaluated in the reference benchmark table.
std::vector<PreferenceSet> benchmark_preference_sets();

/// Stable sort of `ids` by the preference key; equal keys keep input order.
Sequence sort_by_preference(const Sequence& ids, const PropertyTable& props, const Preference& p);

/// Unit-cost edit distance over tokens.
std::size_t levenshtein(const Sequence& a, const Sequence& b);

/// Normalized distance of `a` from its own preference-sorted order.
double phi(const Sequence& a, const Preference& p, const PropertyTable& props);

/// 1 - mean phi over the set. Computed from the integer distance sum so that
/// mathematically equal scores compare equal.
double joint_score(const Sequence& a, const PreferenceSet& prefs, const PropertyTable& props);

struct ScoredStack {
  Sequence stack;
  double score = 0.0;

  bool operator==(const ScoredStack&) const = default;
};

/// Highest joint score over A_S; ties go to the lexicographically smallest
/// sequence. Throws NoStableStack on an empty A_S.
ScoredStack best_achievable(const StackCatalog& catalog, const PreferenceSet& prefs,
                            const PropertyTable& props);

inline ScoredStack best_achievable(const StackCatalog& catalog, const PreferenceSet& prefs) {
  return best_achievable(catalog, prefs, catalog.props);
}

// Preference text rendering.

enum class TemplateSplit { train, eval };

struct PreferenceTemplate {
  int id = 0;
  TemplateSplit split = TemplateSplit::train;
  std::string lead;
  std::string joiner;
  std::string trailer;
  /// Clause per (kind, direction); index = kind * 2 + direction.
  std::vector<std::string> clauses;
};

class TemplateBank {
 public:
  /// The bank compiled into the library from data/templates_v1.json.
  static const TemplateBank& builtin();
  static TemplateBank from_json(const nlohmann::json& j);

  int version() const { return version_; }
  const std::vector<PreferenceTemplate>& templates() const { return templates_; }
  std::vector<int> ids(TemplateSplit split) const;

  /// Throws UnknownTemplate.
  const PreferenceTemplate& get(int template_id) const;

  std::string render(const PreferenceSet& prefs, int template_id) const;

  /// Picks a template of `split` uniformly using `rng_key`.
  int choose(TemplateSplit split, std::uint64_t rng_key) const;

 private:
  int version_ = 0;
  std::vector<PreferenceTemplate> templates_;
};

/// Renders with an explicit template, or picks one from `split` via rng_key.
std::string render_preference(const PreferenceSet& prefs, int template_id);
std::pair<int, std::string> render_preference(const PreferenceSet& prefs, TemplateSplit split,
                                              std::uint64_t rng_key);

}  // namespace stacklab
