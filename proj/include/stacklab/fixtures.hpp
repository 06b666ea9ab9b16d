#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "stacklab/agents.hpp"
#include "stacklab/core_model.hpp"

namespace stacklab {

/// Three boxes of identical size whose contents differ: box1 holds a small
/// steel cube, box2 an aluminium block and box3 loose lead balls. By weight
/// the order is box3 > box2 > box1; measurements arrive box1, box2, box3.
Scenario three_box_scenario();

/// Turns that rebuild the three-box stack after box3 turns out heaviest.
std::vector<std::string> three_box_script();

/// (user, assistant) pair from the three-box weight trajectory, used as the
/// few-shot example for chat agents. Online mode shows the second turn.
std::pair<std::string, std::string> three_box_few_shot(Mode mode);

struct FixtureEntry {
  std::string name;
  bool passed = false;
  std::string diff;  ///< First difference, empty when passed.
};

struct FixtureReport {
  std::vector<FixtureEntry> entries;

  bool all_passed() const;
  /// One "PASS name" / "FAIL name: diff" line per fixture.
  std::string summary() const;
  /// Throws FixtureMismatch listing the failed fixtures.
  void require_all_passed() const;
};

/// Runs every fixture listed in `<dir>/fixtures.json` and compares against
/// the stored expected outputs. Discrete outputs must match exactly, scores
/// to 1e-9.
FixtureReport verify_fixtures(const std::string& dir, std::size_t workers = 1);

/// Recomputes and overwrites the expected outputs.
void update_fixtures(const std::string& dir, std::size_t workers = 1);

}  // namespace stacklab
