#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "oracles.hpp"
#include "stacklab/fixtures.hpp"
#include "stacklab/rng.hpp"
#include "stacklab/scenario_gen.hpp"
#include "stacklab/stability_sim.hpp"

using namespace stacklab;

namespace {

PhysParams quiet() {
  PhysParams p;
  p.placement_sigma = 0;
  p.impulse_angle_deg = 0;
  p.support_inset = 0;
  return p;
}

Scenario cubes(int k, double side = 0.2) {
  Scenario s;
  s.id = "cubes";
  s.seed = 1;
  for (int i = 1; i <= k; ++i) {
    const auto id = "c" + std::to_string(i);
    s.boxes.push_back({id, side, side, side, 0.005, 700, {ContentObject::cuboid(0.1, 0.1, 0.1, 2700)}});
    s.reveal_order.push_back(id);
  }
  return s;
}

PhysStack manual(const Scenario& s, const std::vector<std::pair<std::string, Vec2>>& boxes) {
  PhysStack st;
  double z = 0;
  for (const auto& [id, off] : boxes) {
    const auto& b = s.box(id);
    st.boxes.push_back({id, off, box_weight(b), z, z + b.h / 2});
    z += b.h;
  }
  return st;
}

}  // namespace

TEST(Disturbance, ZeroParamsGiveZero) {
  const auto d = sample_disturbance(7, {"a", "b"}, quiet());
  EXPECT_EQ(d.offset, (Vec2{0, 0}));
  EXPECT_NEAR(std::hypot(d.impulse.x, d.impulse.y), 0.0, 1e-15);
}

TEST(Disturbance, KeyedByPrefix) {
  const PhysParams p;
  const auto a = sample_disturbance(7, {"a", "b"}, p);
  const auto b = sample_disturbance(7, {"a", "b"}, p);
  EXPECT_EQ(a.offset, b.offset);
  EXPECT_EQ(a.impulse, b.impulse);
  EXPECT_NE(sample_disturbance(7, {"b", "a"}, p).offset, a.offset);
}

TEST(Disturbance, ImpulseMagnitudeAtThirteenDegrees) {
  PhysParams p;
  p.angle_mode = AngleMode::uniform_cap;
  // A uniform draw below the cap: check the formula at the drawn angle and at the cap.
  const double at_cap = 0.05 * 0.4 * std::sin(13.0 * std::numbers::pi / 180.0);
  EXPECT_NEAR(at_cap, 0.0045, 5e-5);
  for (int i = 0; i < 100; ++i) {
    const auto d = sample_disturbance(i, {"x"}, p);
    EXPECT_LE(std::hypot(d.impulse.x, d.impulse.y), at_cap + 1e-15);
  }
}

TEST(SupportRegion, IdenticalFootprints) {
  const BoxSpec lower{"l", 0.3, 0.2, 0.1, 0.005, 700, {}};
  const auto r = support_region(lower, {0.1, -0.2}, 0.3, 0.2, {0.1, -0.2});
  ASSERT_TRUE(r);
  EXPECT_NEAR(r->width(), 0.3, 1e-12);
  EXPECT_NEAR(r->depth(), 0.2, 1e-12);
  EXPECT_NEAR(r->center().x, 0.1, 1e-12);
  EXPECT_NEAR(r->center().y, -0.2, 1e-12);
}

TEST(SupportRegion, OffsetMatchesIntervalOracle) {
  const BoxSpec lower{"l", 0.3, 0.2, 0.1, 0.005, 700, {}};
  const auto r = support_region(lower, {0, 0}, 0.3, 0.2, {0.05, 0});
  ASSERT_TRUE(r);
  EXPECT_NEAR(r->width(), 0.25, 1e-12);
  EXPECT_NEAR(r->depth(), 0.2, 1e-12);
  EXPECT_FALSE(support_region(lower, {0, 0}, 0.3, 0.2, {0.35, 0}));

  Rng rng(8);
  for (int i = 0; i < 1000; ++i) {
    const double lw = rng.uniform(0.05, 0.4), ld = rng.uniform(0.05, 0.4);
    const double uw = rng.uniform(0.05, 0.4), ud = rng.uniform(0.05, 0.4);
    const Vec2 lp{rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2)};
    const Vec2 up{rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2)};
    const BoxSpec l{"l", lw, ld, 0.1, 0.005, 700, {}};
    const auto got = support_region(l, lp, uw, ud, up);
    const auto ix = oracle::intersect(oracle::span(lp.x, lw), oracle::span(up.x, uw));
    const auto iy = oracle::intersect(oracle::span(lp.y, ld), oracle::span(up.y, ud));
    ASSERT_EQ(got.has_value(), ix && iy);
    if (got) {
      EXPECT_NEAR(got->xmin, ix->lo, 1e-12);
      EXPECT_NEAR(got->xmax, ix->hi, 1e-12);
      EXPECT_NEAR(got->ymin, iy->lo, 1e-12);
      EXPECT_NEAR(got->ymax, iy->hi, 1e-12);
    }
  }
}

TEST(CheckStable, SingleBoxAndCenteredPair) {
  const auto s = cubes(2);
  const PhysParams p;
  EXPECT_TRUE(check_stable(manual(s, {{"c1", {0.3, 0.3}}}), s, p).stable());
  EXPECT_TRUE(check_stable(manual(s, {{"c1", {}}, {"c2", {}}}), s, p).stable());
}

TEST(CheckStable, OverhangingSmallBoxCollapses) {
  const auto s = cubes(2, 0.1);
  const PhysParams p;
  const auto st = manual(s, {{"c1", {}}, {"c2", {0.06, 0}}});
  const auto r = check_stable(st, s, p);
  EXPECT_EQ(r.collapse_interface, std::optional<std::size_t>(1));
  EXPECT_EQ(oracle::first_collapse(s, st.ids(), {{0, 0}, {0.06, 0}},
                                   {st.boxes[0].mass, st.boxes[1].mass}, p),
            std::optional<std::size_t>(1));
}

TEST(CheckStable, TinyBaseUnderHeavyBoxCollapses) {
  Scenario s;
  s.id = "tiny";
  s.boxes = {{"tiny", 0.05, 0.05, 0.05, 0.005, 700, {}},
             {"big", 0.4, 0.4, 0.2, 0.005, 700, {ContentObject::cuboid(0.3, 0.3, 0.15, 7800)}}};
  s.reveal_order = {"tiny", "big"};
  const auto st = manual(s, {{"tiny", {}}, {"big", {0.03, 0}}});
  EXPECT_FALSE(check_stable(st, s, PhysParams{}).stable());
  EXPECT_TRUE(oracle::first_collapse(s, st.ids(), {{0, 0}, {0.03, 0}},
                                     {st.boxes[0].mass, st.boxes[1].mass}, PhysParams{}));
}

TEST(CheckStable, TranslationInvariant) {
  const auto scenario = sample_scenario(GenConfig{}, 3);
  const PhysParams p;
  Rng rng(4);
  for (int i = 0; i < 300; ++i) {
    std::vector<std::pair<std::string, Vec2>> boxes;
    for (const auto& b : scenario.boxes) {
      boxes.push_back({b.id, {rng.normal() * 0.03, rng.normal() * 0.03}});
    }
    auto moved = boxes;
    moved[0].second = moved[0].second + Vec2{rng.uniform(-5, 5), rng.uniform(-5, 5)};
    EXPECT_EQ(check_stable(manual(scenario, boxes), scenario, p).collapse_interface,
              check_stable(manual(scenario, moved), scenario, p).collapse_interface);
  }
}

TEST(CheckStable, NestedEmptyBoxesWithoutDisturbanceAreStable) {
  PhysParams p = quiet();
  p.slosh_coeff = 0;
  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    Scenario s;
    s.id = "nested";
    double side = 0.4;
    std::vector<std::pair<std::string, Vec2>> boxes;
    for (int i = 0; i < 6; ++i) {
      const auto id = "n" + std::to_string(i);
      s.boxes.push_back({id, side, side * 0.9, 0.1, 0.005, 700, {}});
      boxes.push_back({id, {}});
      side *= rng.uniform(0.5, 1.0);
    }
    EXPECT_TRUE(check_stable(manual(s, boxes), s, p).stable());
  }
}

TEST(PlaceBox, EmptyStackAlwaysHolds) {
  const auto s = cubes(3);
  PhysParams p;
  p.placement_sigma = 5.0;
  EXPECT_TRUE(place_box({}, "c1", s, p).ok());
}

TEST(PlaceBox, LeavesInputUntouched) {
  const auto s = cubes(2, 0.1);
  PhysParams p;
  p.placement_sigma = 1.0;
  const auto base = place_box({}, "c1", s, p);
  ASSERT_TRUE(base.ok());
  const auto copy = *base.stack;
  const auto r = place_box(*base.stack, "c2", s, p);
  EXPECT_FALSE(r.ok());
  EXPECT_EQ(r.collapse_interface, std::optional<std::size_t>(1));
  EXPECT_EQ(*base.stack, copy);
  EXPECT_THROW(place_box(copy, "c1", s, p), std::invalid_argument);
}

TEST(SimulateOrder, IdenticalCubesComplete) {
  const auto s = cubes(5);
  const auto r = simulate_order(s, {"c3", "c1", "c5", "c2", "c4"}, quiet());
  EXPECT_TRUE(r.completed);
  EXPECT_EQ(r.stable_prefix_length(), 5u);
}

TEST(SimulateOrder, UnsupportableSecondPlacementFailsAtOne) {
  Scenario s;
  s.id = "pin";
  s.seed = 2;
  s.boxes = {{"pin", 0.009, 0.009, 0.2, 0.002, 700, {}},
             {"slab", 0.4, 0.4, 0.1, 0.005, 700, {ContentObject::cuboid(0.3, 0.3, 0.05, 7800)}}};
  s.reveal_order = {"pin", "slab"};
  const PhysParams p;
  // Oracle: a 9 mm pin has no support left after a 5 mm inset on each side.
  const auto r = simulate_order(s, {"pin", "slab"}, p);
  EXPECT_FALSE(r.completed);
  EXPECT_EQ(r.stable_prefix_length(), 1u);
  const auto again = simulate_order(s, {"pin", "slab"}, p);
  EXPECT_EQ(again.stack, r.stack);
}

TEST(Enumerate, IdenticalCubesGiveAllOrders) {
  const auto cat = enumerate_stacks(cubes(3), quiet());
  EXPECT_EQ(cat.completed.size(), 6u);
  EXPECT_EQ(cat.stable_prefixes.size(), 3u + 6u + 6u);
}

TEST(Enumerate, NodeCountBound) {
  for (std::uint64_t i = 0; i < 10; ++i) {
    const auto s = sample_scenario(GenConfig{}, i);
    const auto cat = enumerate_stacks(s, PhysParams{});
    std::size_t bound = 0, term = 1;
    for (std::size_t j = 0; j < s.boxes.size(); ++j) {
      term *= s.boxes.size() - j;
      bound += term;
    }
    EXPECT_LE(cat.stable_prefixes.size(), bound);
  }
}

TEST(Enumerate, MatchesBruteForce) {
  GenConfig cfg;
  cfg.min_boxes = 3;
  cfg.max_boxes = 4;
  const PhysParams p;
  for (std::uint64_t i = 0; i < 20; ++i) {
    const auto s = sample_scenario(cfg, i);
    const auto cat = enumerate_stacks(s, p);
    const auto bf = oracle::brute_force(s, p);
    std::set<Sequence> prefixes;
    for (const auto& [seq, st] : cat.stable_prefixes) prefixes.insert(seq);
    EXPECT_EQ(prefixes, bf.stable_prefixes) << s.id;
    EXPECT_EQ(std::set<Sequence>(cat.completed.begin(), cat.completed.end()), bf.completed) << s.id;
  }
}

TEST(Enumerate, ClosedUnderPrefixAndWorkerIndependent) {
  for (std::uint64_t i = 0; i < 8; ++i) {
    const auto s = sample_scenario(GenConfig{}, 100 + i);
    const auto one = enumerate_stacks(s, PhysParams{}, 1);
    EXPECT_NO_THROW(check_closure(one));
    for (const auto& seq : one.completed) {
      for (std::size_t j = 1; j <= seq.size(); ++j) {
        EXPECT_TRUE(one.is_stable_prefix(Sequence(seq.begin(), seq.begin() + static_cast<long>(j))));
      }
    }
    EXPECT_EQ(catalog_digest(one), catalog_digest(enumerate_stacks(s, PhysParams{}, 4)));
    EXPECT_EQ(one, enumerate_stacks(s, PhysParams{}, 3));
  }
}

TEST(Enumerate, ThreeBoxFixtureDigestIsStable) {
  const auto cat = enumerate_stacks(three_box_scenario(), PhysParams{});
  EXPECT_EQ(cat.completed.size(), 6u);
  EXPECT_EQ(catalog_digest(cat), "ecbf8adb93ffadea");
}

TEST(CatalogJson, RoundTripKeepsDigest) {
  const auto cat = enumerate_stacks(three_box_scenario(), PhysParams{});
  const nlohmann::json j = cat;
  const auto back = j.get<StackCatalog>();
  EXPECT_EQ(catalog_digest(back), catalog_digest(cat));
  EXPECT_EQ(back.completed, cat.completed);
}

TEST(CatalogCache, ReusesAndKeysOnParams) {
  const auto dir = std::filesystem::temp_directory_path() / "stacklab-test-cache";
  std::filesystem::remove_all(dir);
  const CatalogCache cache(dir.string());
  const auto s = three_box_scenario();
  const auto a = cache.load_or_build(s, PhysParams{});
  EXPECT_TRUE(std::filesystem::exists(cache.path_for(s, PhysParams{})));
  EXPECT_EQ(cache.load_or_build(s, PhysParams{}), a);
  PhysParams other;
  other.placement_sigma = 0.01;
  EXPECT_NE(cache.path_for(s, other), cache.path_for(s, PhysParams{}));
  std::filesystem::remove_all(dir);
}

TEST(Params, ValidateRejectsBadValues) {
  PhysParams p;
  p.impulse_angle_deg = 95;
  EXPECT_THROW(validate(p), std::invalid_argument);
  p = {};
  p.placement_sigma = -1;
  EXPECT_THROW(validate(p), std::invalid_argument);
  EXPECT_NE(params_hash(PhysParams{}), params_hash(p));
}
