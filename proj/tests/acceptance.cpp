// Acceptance suite: one PASS/FAIL line per criterion, exit code 0 only when
// every criterion passes.

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "stacklab/dataset.hpp"
#include "stacklab/errors.hpp"
#include "stacklab/eval.hpp"
#include "stacklab/fixtures.hpp"
#include "stacklab/io.hpp"
#include "stacklab/parallel.hpp"
#include "stacklab/rng.hpp"

using namespace stacklab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool passed = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && passed) {
      passed = false;
      detail = what;
    }
  }
};

std::size_t workers() { return std::max(1u, std::thread::hardware_concurrency()); }

bool near(double a, double b) { return std::fabs(a - b) <= 1e-12; }

// 1. Formulas and their properties.
Outcome formulas() {
  Outcome o;
  o.require(object_stability(ContentObject::sphere(0.05, 7800)) == 0.0, "sphere stability");
  o.require(near(object_stability(ContentObject::cuboid(0.1, 0.1, 0.1, 1)), 1.0), "cube stability");
  o.require(near(object_stability(ContentObject::cylinder(0.04, 0.08, 1)), 0.5), "cylinder stability");
  BoxSpec box{"b", 0.3, 0.2, 0.15, 0.005, 690, {}};
  o.require(box_stability(box) == 1.0, "empty box stability");
  o.require(near(box_weight(box), oracle::box_weight(box)), "carton weight");
  box.contents = {ContentObject::sphere(0.05, 1), ContentObject::cuboid(0.1, 0.1, 0.1, 1)};
  o.require(near(box_stability(box), 0.5), "mean box stability");

  const Preference w{PreferenceKind::weight};
  const Preference s{PreferenceKind::size};
  PropertyTable props{{"b1", {1, 0.3, 1, 1}}, {"b2", {2, 0.2, 1, 1}}, {"b3", {3, 0.1, 1, 1}}};
  o.require(levenshtein({"b1", "b2", "b3"}, {"b1", "b2", "b3"}) == 0, "levenshtein identical");
  o.require(levenshtein({"b1", "b2"}, {"b2", "b1"}) == 2, "levenshtein swap");
  o.require(levenshtein({"b1", "b2", "b3"}, {"b3", "b2", "b1"}) == 2, "levenshtein reverse");
  o.require(phi({"b3", "b2", "b1"}, w, props) == 0.0, "phi sorted");
  o.require(near(phi({"b1", "b2", "b3"}, w, props), 2.0 / 3.0), "phi reversed triple");
  PropertyTable pair{{"b1", {1, 1, 1, 1}}, {"b2", {2, 1, 1, 1}}};
  o.require(near(phi({"b1", "b2"}, w, pair), 1.0), "phi reversed pair");
  o.require(near(joint_score({"b1", "b2"}, PreferenceSet({w}), pair), 0.0), "joint reversed pair");
  o.require(near(joint_score({"b3", "b2", "b1"}, PreferenceSet({w}), props), 1.0), "joint sorted");
  o.require(near(joint_score({"b3", "b2", "b1"}, PreferenceSet({w, s}), props), 2.0 / 3.0), "joint mixed");
  o.require(render_preference(PreferenceSet({w}), 0) == "Stack the boxes heaviest to lightest", "template 0");

  Rng rng(2024);
  const std::vector<std::string> alphabet{"a", "b", "c", "d"};
  auto seq = [&](std::size_t n) {
    Sequence out;
    for (auto k = rng.below(n + 1); k > 0; --k) out.push_back(rng.pick(alphabet));
    return out;
  };
  for (int i = 0; i < 10000 && o.passed; ++i) {
    const auto a = seq(7), b = seq(7), c = seq(7);
    const auto ab = levenshtein(a, b);
    o.require((ab == 0) == (a == b), "levenshtein identity of indiscernibles");
    o.require(ab == levenshtein(b, a), "levenshtein symmetry");
    o.require(levenshtein(a, c) <= ab + levenshtein(b, c), "levenshtein triangle inequality");
  }
  for (int i = 0; i < 150 && o.passed; ++i) {
    const auto a = seq(4), b = seq(4);
    o.require(levenshtein(a, b) == oracle::edit_distance_bfs(a, b), "levenshtein vs edit search");
  }
  const auto sets = benchmark_preference_sets();
  for (int i = 0; i < 5000 && o.passed; ++i) {
    PropertyTable t;
    Sequence a;
    const auto k = 1 + rng.below(6);
    for (std::size_t j = 0; j < k; ++j) {
      auto v = [&] { return i % 2 ? rng.uniform(0, 5) : static_cast<double>(rng.below(3)); };
      t["b" + std::to_string(j)] = {v(), v(), v(), v()};
      a.push_back("b" + std::to_string(j));
    }
    rng.shuffle(a);
    for (const auto& set : sets) {
      for (const auto& p : set.items()) {
        const double f = phi(a, p, t);
        o.require(f >= 0.0 && f <= 1.0, "phi out of [0, 1]");
        o.require((f == 0.0) == (sort_by_preference(a, t, p) == a), "phi zero iff sorted");
      }
    }
  }
  return o;
}

// 2. Prefix-tree enumeration against brute force.
Outcome enumeration() {
  Outcome o;
  GenConfig cfg;
  cfg.min_boxes = 3;
  cfg.max_boxes = 4;
  cfg.master_seed = 2;
  const PhysParams p;
  std::vector<std::string> failures(50);
  parallel_for(50, workers(), [&](std::size_t i) {
    const auto s = sample_scenario(cfg, i);
    const auto cat = enumerate_stacks(s, p);
    const auto bf = oracle::brute_force(s, p);
    std::set<Sequence> prefixes;
    for (const auto& [seq, _] : cat.stable_prefixes) prefixes.insert(seq);
    if (prefixes != bf.stable_prefixes) failures[i] = s.id + ": stable prefixes differ";
    if (std::set<Sequence>(cat.completed.begin(), cat.completed.end()) != bf.completed) {
      failures[i] = s.id + ": completed stacks differ";
    }
  });
  for (const auto& f : failures) o.require(f.empty(), f);
  return o;
}

// 3. Dataset samples replay legally and use only training templates.
Outcome dataset() {
  Outcome o;
  DatasetConfig cfg;
  cfg.scenarios_per_set = 100;
  const auto ds = build_dataset(cfg, nullptr, workers());
  o.require(ds.samples.size() >= 1000, "expected at least 1000 samples, got " + std::to_string(ds.samples.size()));

  struct Entry {
    Scenario scenario;
    StackCatalog catalog;
    PreferenceSet prefs;
    Trajectory traj;
  };
  std::vector<Entry> entries(ds.manifest["scenarios"].size());
  parallel_for(entries.size(), workers(), [&](std::size_t i) {
    const auto& m = ds.manifest["scenarios"][i];
    const auto prefs = PreferenceSet::parse(m["preferences"].get<std::string>());
    std::size_t set = 0;
    while (!(cfg.preference_sets[set] == prefs)) ++set;
    const auto f = sample_feasible(cfg.gen, cfg.physics, prefs, cfg.threshold,
                                   slot_index(SampleStream::dataset, set, m["slot"].get<std::size_t>()));
    entries[i] = {f.scenario, f.catalog, prefs, build_trajectory(f.scenario, f.catalog, prefs)};
  });
  std::map<std::pair<std::string, std::string>, const Entry*> by_id;
  for (const auto& e : entries) by_id[{e.scenario.id, e.prefs.to_string()}] = &e;

  const auto& bank = TemplateBank::builtin();
  const auto train = bank.ids(TemplateSplit::train);
  for (const auto& sample : ds.samples) {
    if (!o.passed) break;
    const auto it = by_id.find({sample.meta["scenario_id"].get<std::string>(),
                                sample.meta["preferences"].get<std::string>()});
    o.require(it != by_id.end(), "sample for unknown scenario");
    if (it == by_id.end()) break;
    const Entry& e = *it->second;
    const int tid = sample.meta["template_id"].get<int>();
    o.require(std::find(train.begin(), train.end(), tid) != train.end(), "eval template id in sample");
    std::vector<std::string> eval_texts;
    for (int id : bank.ids(TemplateSplit::eval)) eval_texts.push_back(bank.render(e.prefs, id));

    StackState st = StackState::all_on_table(e.scenario);
    for (const auto& m : sample.messages) {
      if (m.role == "user") {
        for (const auto& t : eval_texts) {
          o.require(m.content.find(t) == std::string::npos, "eval template text in sample");
        }
        continue;
      }
      Plan plan;
      try {
        plan = parse_plan(m.content);
      } catch (const ParseError& err) {
        o.require(false, std::string("assistant turn does not parse: ") + err.what());
        break;
      }
      if (plan.is_wait()) continue;
      for (const auto& a : plan.actions) {
        try {
          st = apply_action(st, a);
        } catch (const IllegalAction& err) {
          o.require(false, std::string("illegal action: ") + err.what());
          break;
        }
        if (a.kind == Action::Kind::stack) {
          o.require(e.catalog.is_stable_prefix(st.stacked), "replay passes an unstable stack");
        }
      }
    }
    const auto form = sample.meta["form"].get<std::string>();
    if (form == "prefix") continue;
    const auto recorded = sample.meta["final_stack"].get<Sequence>();
    o.require(st.stacked == recorded, e.scenario.id + ": replay does not reach the recorded stack");
    o.require(st.complete(), e.scenario.id + ": replay leaves boxes on the table");
    const double target_score = form == "offline" ? best_achievable(e.catalog, e.prefs).score
                                                  : e.traj.final_score;
    o.require(joint_score(st.stacked, e.prefs, e.catalog.props) == target_score,
              e.scenario.id + ": final score differs from the target score");
  }
  return o;
}

/// Paired one-sided t-test p-value for mean(a - b) > 0.
double paired_p_value(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  double mean = 0;
  for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
  mean /= static_cast<double>(n);
  double var = 0;
  for (std::size_t i = 0; i < n; ++i) var += (a[i] - b[i] - mean) * (a[i] - b[i] - mean);
  var /= static_cast<double>(n - 1);
  if (var == 0) return mean > 0 ? 0.0 : 1.0;
  const double t = mean / std::sqrt(var / static_cast<double>(n));
  boost::math::students_t dist(static_cast<double>(n - 1));
  return boost::math::cdf(boost::math::complement(dist, t));
}

struct SuiteChecks {
  Outcome feasibility;
  Outcome oracle;
  Outcome baselines;
};

// 4, 5 and 6 share one default suite: 40 scenarios per set, threshold 0.4.
SuiteChecks suite_checks() {
  SuiteChecks c;
  SuiteConfig cfg;
  const auto suite = run_suite(cfg, make_baseline_agent, nullptr, workers());

  std::map<std::size_t, int> per_set;
  for (const auto& sc : suite.scenarios) {
    per_set[sc.set]++;
    c.feasibility.require(sc.feasible.best.score >= 0.4,
                          sc.feasible.scenario.id + " best score " + format_fixed(sc.feasible.best.score, 3));
  }
  c.feasibility.require(suite.scenarios.size() == 200, "expected 200 scenarios");
  for (const auto& [set, n] : per_set) c.feasibility.require(n == 40, "unequal scenarios per set");
  c.feasibility.detail = c.feasibility.passed ? "200 scenarios, 40 per set" : c.feasibility.detail;

  for (auto mode : {Mode::offline, Mode::online}) {
    const auto* row = suite.table.find("all", "oracle", mode);
    c.oracle.require(row && row->cell.success_rate == 1.0, "oracle success rate below 1");
    c.oracle.require(row && row->cell.preference_score &&
                         std::fabs(*row->cell.preference_score - 1.0) <= 1e-9,
                     "oracle preference score below 1");
  }
  for (const auto& r : suite.results) {
    c.oracle.require(r.success_scaled == (r.success ? 1.0 : 0.0) * r.relative_score,
                     "success-scaled differs from the product for " + r.scenario_id);
  }
  MetricsCell example{4, 3, 0.75, 0.61, 0.75 * 0.61};
  c.oracle.require(format_cell(example) == "0.75 / 0.61 / 0.46", "0.75 x 0.61 does not print as 0.46");

  std::map<std::pair<std::string, std::string>, std::pair<double, double>> paired;
  for (const auto& r : suite.results) {
    auto& slot = paired[{r.scenario_id, r.preferences}];
    if (r.agent == "greedy") slot.first += r.success_scaled / 2.0;
    if (r.agent == "random") slot.second += r.success_scaled / 2.0;
  }
  std::vector<double> greedy, random;
  for (const auto& [_, v] : paired) {
    greedy.push_back(v.first);
    random.push_back(v.second);
  }
  double mg = 0, mr = 0;
  for (std::size_t i = 0; i < greedy.size(); ++i) {
    mg += greedy[i];
    mr += random[i];
  }
  mg /= static_cast<double>(greedy.size());
  mr /= static_cast<double>(random.size());
  const double p = paired_p_value(greedy, random);
  c.baselines.require(greedy.size() == 200, "expected 200 paired scenarios");
  c.baselines.require(mg > mr && p < 0.05, "greedy does not beat random");
  std::ostringstream os;
  os << "greedy " << format_fixed(mg, 3) << " vs random " << format_fixed(mr, 3) << ", p = " << p;
  if (c.baselines.passed) c.baselines.detail = os.str();
  return c;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(STACKLAB_CLI) + " " + args + " > /dev/null 2>&1";
  return std::system(cmd.c_str());
}

// 7. Catalogs and metric tables do not depend on the worker count.
Outcome determinism() {
  Outcome o;
  const auto root = fs::temp_directory_path() / "stacklab-acceptance-determinism";
  fs::remove_all(root);
  fs::create_directories(root / "scenarios");
  o.require(run_cli("--seed 3 gen --count 6 --out " + (root / "scenarios").string()) == 0, "gen failed");
  save_scenario(three_box_scenario(), (root / "scenarios" / "three-box.json").string());

  const std::vector<int> counts{1, 4, 16};
  for (const auto& entry : fs::directory_iterator(root / "scenarios")) {
    std::vector<std::string> outputs;
    for (int n : counts) {
      const auto out = root / ("catalog-" + std::to_string(n) + ".json");
      o.require(run_cli("--no-cache --workers " + std::to_string(n) + " simulate " +
                        entry.path().string() + " --out " + out.string()) == 0,
                "simulate failed");
      outputs.push_back(read_text_file(out.string()));
    }
    o.require(outputs[0] == outputs[1] && outputs[1] == outputs[2],
              "catalog of " + entry.path().filename().string() + " depends on workers");
  }

  std::vector<std::string> tables;
  for (int n : counts) {
    const auto out = root / ("eval-" + std::to_string(n));
    o.require(run_cli("--seed 3 --no-cache --workers " + std::to_string(n) + " eval --out " + out.string()) == 0,
              "eval failed");
    std::string all;
    for (const auto* f : {"results.csv", "metrics.csv", "metrics.md", "summary.json"}) {
      all += read_text_file((out / f).string());
    }
    tables.push_back(all);
  }
  o.require(tables[0] == tables[1] && tables[1] == tables[2], "eval output depends on workers");
  fs::remove_all(root);
  return o;
}

// 8. Hand-built three-box replay.
Outcome scripted_replay() {
  Outcome o;
  const auto s = three_box_scenario();
  const auto cat = enumerate_stacks(s, PhysParams{});
  ScriptedAgent agent(three_box_script());
  const auto r = run_episode(s, cat, PreferenceSet::parse("weight"), agent, Mode::online, PhysParams{});
  o.require(r.success, "episode failed: " + std::string(to_string(r.cause)) + " " + r.detail);
  o.require(!r.final_stack.empty() && r.final_stack.front() == "box3", "box3 is not at the bottom");
  if (o.passed) o.detail = "final stack " + render_stack(r.final_stack);
  return o;
}

}  // namespace

int main() {
  using clock = std::chrono::steady_clock;
  int failed = 0;
  auto report = [&](int id, const char* name, Outcome o, double seconds, double limit) {
    if (seconds > limit) o.require(false, "took " + format_fixed(seconds, 1) + " s, limit " + format_fixed(limit, 0) + " s");
    if (!o.passed) ++failed;
    std::cout << (o.passed ? "PASS" : "FAIL") << " [" << id << "] " << name << " (" << format_fixed(seconds, 2)
              << " s)" << (o.detail.empty() ? "" : ": " + o.detail) << std::endl;
  };
  auto timed = [&](auto fn) {
    const auto t0 = clock::now();
    auto result = fn();
    return std::make_pair(std::move(result), std::chrono::duration<double>(clock::now() - t0).count());
  };

  try {
    auto [f, tf] = timed(formulas);
    report(1, "formula fidelity and property suites", f, tf, 10);
    auto [e, te] = timed(enumeration);
    report(2, "enumeration matches brute force on 50 scenarios", e, te, 60);
    auto [d, td] = timed(dataset);
    report(3, "1000 dataset samples replay legally", d, td, 300);
    auto [c, tc] = timed(suite_checks);
    report(4, "feasibility filter at threshold 0.4", c.feasibility, tc, 600);
    report(5, "oracle upper bound and success-scaled arithmetic", c.oracle, tc, 600);
    report(6, "greedy beats random on 200 scenarios", c.baselines, tc, 600);
    auto [m, tm] = timed(determinism);
    report(7, "byte-identical output at 1, 4 and 16 workers", m, tm, 600);
    auto [r, tr] = timed(scripted_replay);
    report(8, "three-box scripted replay ends with box3 at the bottom", r, tr, 60);
  } catch (const std::exception& ex) {
    std::cout << "FAIL acceptance suite aborted: " << ex.what() << std::endl;
    return 1;
  }
  return failed == 0 ? 0 : 1;
}
