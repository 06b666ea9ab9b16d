#include <gtest/gtest.h>

#include <filesystem>

#include "stacklab/errors.hpp"
#include "stacklab/fixtures.hpp"
#include "stacklab/io.hpp"
#include "stacklab/suite_config.hpp"

using namespace stacklab;
namespace fs = std::filesystem;

namespace {

const std::string kFixtures = STACKLAB_SOURCE_DIR "/fixtures/v1";

fs::path scratch_copy(const std::string& name) {
  const auto dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::copy(kFixtures, dir, fs::copy_options::recursive);
  return dir;
}

}  // namespace

TEST(Fixtures, CheckoutVerifies) {
  const auto report = verify_fixtures(kFixtures, 2);
  EXPECT_EQ(report.entries.size(), 5u);
  EXPECT_TRUE(report.all_passed()) << report.summary();
  EXPECT_NO_THROW(report.require_all_passed());
}

TEST(Fixtures, PerturbedSeedIsDetected) {
  const auto dir = scratch_copy("stacklab-test-fixtures");
  const auto path = (dir / "three_box" / "scenario.json").string();
  auto scenario = read_json_file(path);
  scenario["seed"] = scenario["seed"].get<int>() + 1;
  write_json_file(path, scenario);

  const auto report = verify_fixtures(dir.string(), 1);
  EXPECT_FALSE(report.all_passed());
  bool catalog_failed = false;
  for (const auto& e : report.entries) {
    if (e.name == "three-box-catalog") {
      catalog_failed = !e.passed;
      EXPECT_NE(e.diff.find("digest"), std::string::npos) << e.diff;
    }
  }
  EXPECT_TRUE(catalog_failed);
  EXPECT_THROW(report.require_all_passed(), FixtureMismatch);

  update_fixtures(dir.string(), 1);
  EXPECT_TRUE(verify_fixtures(dir.string(), 1).all_passed());
  fs::remove_all(dir);
}

TEST(Fixtures, ThreeBoxScenarioMatchesFile) {
  EXPECT_EQ(load_scenario(kFixtures + "/three_box/scenario.json"), three_box_scenario());
  const auto s = three_box_scenario();
  EXPECT_GT(box_weight(s.box("box3")), box_weight(s.box("box2")));
  EXPECT_GT(box_weight(s.box("box2")), box_weight(s.box("box1")));
  EXPECT_EQ(box_stability(s.box("box3")), 0.0);
}

TEST(ToolConfig, RoundTripAndReseed) {
  ToolConfig cfg;
  cfg.reseed(77);
  EXPECT_EQ(cfg.gen.master_seed, 77u);
  EXPECT_EQ(cfg.eval.episode_seed, 77u);
  const auto path = (fs::temp_directory_path() / "stacklab-test-config.json").string();
  save_tool_config(cfg, path);
  const auto back = load_tool_config(path);
  EXPECT_EQ(to_json(back).dump(), to_json(cfg).dump());
  EXPECT_EQ(back.dataset.gen, back.gen);
  EXPECT_EQ(back.eval.physics, back.physics);

  write_text_file(path, "{\"gen\": {\"box_count\": [9, 9]}}");
  EXPECT_THROW(load_tool_config(path), IoError);
  write_text_file(path, "{not json");
  EXPECT_THROW(load_tool_config(path), IoError);
  EXPECT_THROW(load_tool_config(path + ".missing"), IoError);
  fs::remove(path);
}
