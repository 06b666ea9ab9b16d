#include "stacklab/fixtures.hpp"

#include <cmath>
#include <filesystem>
#include <sstream>

#include "stacklab/dataset.hpp"
#include "stacklab/errors.hpp"
#include "stacklab/eval.hpp"
#include "stacklab/io.hpp"
#include "stacklab/scenario_gen.hpp"
#include "stacklab/stability_sim.hpp"
#include "stacklab/suite_config.hpp"

namespace stacklab {

Scenario three_box_scenario() {
  constexpr double kSide = 0.30;
  constexpr double kHeight = 0.20;
  constexpr double kCardboard = 700.0;

  Scenario s;
  s.id = "three-box";
  s.seed = 6;
  s.boxes = {
      {"box1", kSide, kSide, kHeight, kDefaultWallThickness, kCardboard,
       {ContentObject::cuboid(0.08, 0.08, 0.08, 7800.0)}},
      {"box2", kSide, kSide, kHeight, kDefaultWallThickness, kCardboard,
       {ContentObject::cuboid(0.20, 0.15, 0.10, 2700.0)}},
      {"box3", kSide, kSide, kHeight, kDefaultWallThickness, kCardboard,
       {ContentObject::sphere(0.10, 11300.0), ContentObject::sphere(0.10, 11300.0),
        ContentObject::sphere(0.10, 11300.0), ContentObject::sphere(0.10, 11300.0)}},
  };
  s.reveal_order = {"box1", "box2", "box3"};
  validate(s, 0.5);
  return s;
}

std::vector<std::string> three_box_script() {
  return {"wait", "stack box2, stack box1",
          "unstack box1, unstack box2, stack box3, stack box2, stack box1"};
}

std::pair<std::string, std::string> three_box_few_shot(Mode mode) {
  const auto scenario = three_box_scenario();
  const auto catalog = enumerate_stacks(scenario, PhysParams{});
  const auto prefs = PreferenceSet::parse("weight");
  const auto traj = build_trajectory(scenario, catalog, prefs);
  EmitOptions options;
  options.online = mode == Mode::online;
  options.offline = mode == Mode::offline;
  const auto samples = emit_samples(scenario, traj, 0, options);
  const auto& m = samples.front().messages;
  const std::size_t turn = mode == Mode::online ? 2 : 0;
  return {m.at(turn).content, m.at(turn + 1).content};
}

bool FixtureReport::all_passed() const {
  for (const auto& e : entries) {
    if (!e.passed) return false;
  }
  return true;
}

std::string FixtureReport::summary() const {
  std::string out;
  for (const auto& e : entries) {
    out += e.passed ? "PASS " + e.name + "\n" : "FAIL " + e.name + ": " + e.diff + "\n";
  }
  return out;
}

void FixtureReport::require_all_passed() const {
  std::string failed;
  for (const auto& e : entries) {
    if (!e.passed) failed += (failed.empty() ? "" : ", ") + e.name;
  }
  if (!failed.empty()) throw FixtureMismatch("fixtures failed: " + failed);
}

namespace {

constexpr double kScoreTolerance = 1e-9;

/// First difference between two JSON values, numbers compared to `tol`.
std::string json_diff(const nlohmann::json& expected, const nlohmann::json& actual,
                      const std::string& path, double tol) {
  if (expected.is_number() && actual.is_number()) {
    const double e = expected.get<double>();
    const double a = actual.get<double>();
    if (std::fabs(e - a) <= tol) return {};
    std::ostringstream os;
    os.precision(17);
    os << path << ": expected " << e << ", got " << a;
    return os.str();
  }
  if (expected.type() != actual.type()) {
    return path + ": expected " + expected.dump() + ", got " + actual.dump();
  }
  if (expected.is_array()) {
    if (expected.size() != actual.size()) {
      return path + ": expected " + std::to_string(expected.size()) + " elements, got " +
             std::to_string(actual.size());
    }
    for (std::size_t i = 0; i < expected.size(); ++i) {
      auto d = json_diff(expected[i], actual[i], path + "[" + std::to_string(i) + "]", tol);
      if (!d.empty()) return d;
    }
    return {};
  }
  if (expected.is_object()) {
    for (const auto& [key, value] : expected.items()) {
      if (!actual.contains(key)) return path + "." + key + ": missing";
      auto d = json_diff(value, actual[key], path + "." + key, tol);
      if (!d.empty()) return d;
    }
    for (const auto& [key, value] : actual.items()) {
      if (!expected.contains(key)) return path + "." + key + ": unexpected";
    }
    return {};
  }
  if (expected != actual) return path + ": expected " + expected.dump() + ", got " + actual.dump();
  return {};
}

std::string text_diff(const std::string& expected, const std::string& actual) {
  if (expected == actual) return {};
  std::istringstream e(expected);
  std::istringstream a(actual);
  std::string le;
  std::string la;
  for (std::size_t line = 1;; ++line) {
    const bool has_e = static_cast<bool>(std::getline(e, le));
    const bool has_a = static_cast<bool>(std::getline(a, la));
    if (!has_e && !has_a) return "texts differ in trailing whitespace";
    if (!has_e || !has_a || le != la) {
      return "line " + std::to_string(line) + ": expected '" + (has_e ? le : "<end>") +
             "', got '" + (has_a ? la : "<end>") + "'";
    }
  }
}

struct Output {
  std::string text;    ///< Compared exactly when json is null.
  nlohmann::json json;  ///< Compared with kScoreTolerance on numbers.
};

PhysParams physics_of(const nlohmann::json& spec) {
  return spec.contains("physics") ? spec["physics"].get<PhysParams>() : PhysParams{};
}

Output run_fixture(const std::filesystem::path& dir, const nlohmann::json& spec,
                   std::size_t workers) {
  const auto kind = spec.at("kind").get<std::string>();
  const auto input = [&](const char* key) { return (dir / spec.at(key).get<std::string>()).string(); };

  if (kind == "catalog") {
    const auto scenario = load_scenario(input("scenario"));
    const auto catalog = enumerate_stacks(scenario, physics_of(spec), workers);
    nlohmann::ordered_json j;
    j["digest"] = catalog_digest(catalog);
    j["stable_prefixes"] = catalog.stable_prefixes.size();
    j["completed"] = catalog.completed;
    return {j.dump(2) + "\n", nullptr};
  }
  if (kind == "dataset") {
    const auto scenario = load_scenario(input("scenario"));
    const auto prefs = PreferenceSet::parse(spec.at("preferences").get<std::string>());
    const auto catalog = enumerate_stacks(scenario, physics_of(spec), workers);
    const auto traj = build_trajectory(scenario, catalog, prefs);
    EmitOptions options;
    options.per_prefix = spec.value("per_prefix", false);
    std::string text;
    for (const auto& s :
         emit_samples(scenario, traj, spec.at("template_key").get<std::uint64_t>(), options)) {
      text += to_json_line(s).dump() + "\n";
    }
    return {text, nullptr};
  }
  if (kind == "replay") {
    const auto scenario = load_scenario(input("scenario"));
    const auto prefs = PreferenceSet::parse(spec.at("preferences").get<std::string>());
    const auto physics = physics_of(spec);
    const auto catalog = enumerate_stacks(scenario, physics, workers);
    ScriptedAgent agent(spec.at("replies").get<std::vector<std::string>>());
    EpisodeOptions options;
    options.template_key = spec.value("template_key", std::uint64_t{0});
    const auto r = run_episode(scenario, catalog, prefs, agent,
                               mode_from_string(spec.at("mode").get<std::string>()), physics,
                               options);
    nlohmann::ordered_json j;
    j["success"] = r.success;
    j["failure_cause"] = to_string(r.cause);
    j["final_stack"] = r.final_stack;
    j["action_count"] = r.action_count;
    j["raw_score"] = r.raw_score;
    j["relative_score"] = r.relative_score;
    j["success_scaled"] = r.success_scaled;
    j["replies"] = r.replies;
    return {j.dump(2) + "\n", nlohmann::json::parse(j.dump())};
  }
  if (kind == "gen") {
    const auto cfg = read_json_file(input("config")).get<GenConfig>();
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const auto& index : spec.at("indices")) {
      j.push_back(nlohmann::ordered_json::parse(
          nlohmann::json(sample_scenario(cfg, index.get<std::uint64_t>())).dump()));
    }
    return {j.dump(2) + "\n", nullptr};
  }
  if (kind == "suite") {
    const auto cfg = load_tool_config(input("config"));
    const auto suite = run_suite(cfg.eval, make_baseline_agent, nullptr, workers);
    const auto summary = metrics_summary(suite.table);
    return {summary.dump(2) + "\n", nlohmann::json::parse(summary.dump())};
  }
  throw std::invalid_argument("unknown fixture kind: " + kind);
}

nlohmann::json load_manifest(const std::filesystem::path& dir) {
  return read_json_file((dir / "fixtures.json").string());
}

}  // namespace

FixtureReport verify_fixtures(const std::string& dir, std::size_t workers) {
  const std::filesystem::path base(dir);
  FixtureReport report;
  const auto manifest = load_manifest(base);
  for (const auto& spec : manifest.at("fixtures")) {
    FixtureEntry entry;
    entry.name = spec.at("name").get<std::string>();
    try {
      const auto out = run_fixture(base, spec, workers);
      const auto expected = read_text_file((base / spec.at("expected").get<std::string>()).string());
      entry.diff = out.json.is_null()
                       ? text_diff(expected, out.text)
                       : json_diff(nlohmann::json::parse(expected), out.json, "$", kScoreTolerance);
    } catch (const std::exception& e) {
      entry.diff = e.what();
    }
    entry.passed = entry.diff.empty();
    report.entries.push_back(std::move(entry));
  }
  return report;
}

void update_fixtures(const std::string& dir, std::size_t workers) {
  const std::filesystem::path base(dir);
  const auto manifest = load_manifest(base);
  for (const auto& spec : manifest.at("fixtures")) {
    const auto out = run_fixture(base, spec, workers);
    write_text_file((base / spec.at("expected").get<std::string>()).string(), out.text);
  }
}

}  // namespace stacklab
