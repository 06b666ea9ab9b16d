#include <gtest/gtest.h>

#include "stacklab/agents.hpp"
#include "stacklab/errors.hpp"
#include "stacklab/fixtures.hpp"
#include "stacklab/rng.hpp"
#include "stacklab/scenario_gen.hpp"

using namespace stacklab;

namespace {

Observation observed(std::vector<std::pair<std::string, double>> weights, StackState state = {},
                     std::size_t measured = SIZE_MAX) {
  Observation obs;
  obs.mode = Mode::online;
  obs.prefs = PreferenceSet::parse("weight");
  obs.preference_text = "Stack the boxes heaviest to lightest";
  const bool fresh = state.stacked.empty() && state.on_table.empty();
  for (std::size_t i = 0; i < weights.size(); ++i) {
    BoxObservation b{weights[i].first, 0.3, 0.3, 0.2, std::nullopt};
    if (i < measured) {
      b.measurement = Measurement{b.id, weights[i].second, 0.5};
      obs.revealed.push_back(b.id);
    }
    if (fresh) state.on_table.insert(b.id);
    obs.boxes.push_back(b);
  }
  obs.state = state;
  return obs;
}

StackState replay(StackState st, const Plan& plan) {
  if (plan.is_wait()) return st;
  for (const auto& a : plan.actions) st = apply_action(st, a);
  return st;
}

}  // namespace

TEST(PlanGrammar, CommaSeparatedReplies) {
  EXPECT_EQ(parse_plan("stack box2, stack box1"),
            make_plan({Action::stack("box2"), Action::stack("box1")}));
  EXPECT_TRUE(parse_plan("wait").is_wait());
  EXPECT_TRUE(parse_plan("  WAIT \n").is_wait());
  EXPECT_EQ(parse_plan("Stack A-1; UNSTACK b_2"),
            make_plan({Action::stack("A-1"), Action::unstack("b_2")}));
}

TEST(PlanGrammar, RejectsProse) {
  EXPECT_THROW(parse_plan("I think box5 goes last"), ParseError);
  EXPECT_THROW(parse_plan(""), ParseError);
  EXPECT_THROW(parse_plan("stack"), ParseError);
  EXPECT_THROW(parse_plan("stack box1,"), ParseError);
  try {
    parse_plan("stack box1, jump box2");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 12u);
  }
}

TEST(PlanGrammar, TakesLastValidLine) {
  EXPECT_EQ(parse_plan("Here is the plan:\n```\nstack box3, stack box1\n```\n"),
            make_plan({Action::stack("box3"), Action::stack("box1")}));
  EXPECT_THROW(parse_plan("First stack box3, then box1."), ParseError);
  ParseOptions lenient;
  lenient.lenient = true;
  EXPECT_EQ(parse_plan("First stack box3, then stack box1.", lenient),
            make_plan({Action::stack("box3"), Action::stack("box1")}));
  EXPECT_THROW(parse_plan("I think box5 goes last", lenient), ParseError);
}

TEST(PlanGrammar, RenderRoundTrip) {
  Rng rng(12);
  const std::vector<std::string> ids{"box1", "b-2", "C_3", "x"};
  for (int i = 0; i < 2000; ++i) {
    std::string text;
    const int n = rng.between(1, 5);
    for (int k = 0; k < n; ++k) {
      if (k) text += rng.below(2) ? ", " : " ;";
      text += rng.below(2) ? "stack " : "Unstack  ";
      text += rng.pick(ids);
    }
    const auto plan = parse_plan(text);
    EXPECT_EQ(parse_plan(render_plan(plan)), plan) << text;
  }
  EXPECT_EQ(render_plan(Plan::wait()), "wait");
  EXPECT_EQ(render_plan(make_plan({})), "wait");
}

TEST(Observation, RendersMeasuredAndHiddenBoxes) {
  const auto s = three_box_scenario();
  const auto obs = make_observation(s, PreferenceSet::parse("weight"), "Stack the boxes heaviest to lightest",
                                    Mode::online, 1, StackState::all_on_table(s));
  const auto text = render_observation(obs);
  EXPECT_EQ(text,
            "new measurement: box1\n"
            "box1: weight 5.41 kg, stability 1.00, size 30.0x30.0x20.0 cm, footprint 900 cm^2\n"
            "box2: not measured, size 30.0x30.0x20.0 cm, footprint 900 cm^2\n"
            "box3: not measured, size 30.0x30.0x20.0 cm, footprint 900 cm^2\n"
            "current stack: empty\n"
            "preference: Stack the boxes heaviest to lightest");
  const auto offline = make_observation(s, PreferenceSet::parse("weight"), "p", Mode::offline, 3,
                                        StackState::all_on_table(s));
  EXPECT_TRUE(offline.all_revealed());
  EXPECT_EQ(render_observation(offline).find("new measurement"), std::string::npos);
}

TEST(OracleAgent, OfflineReachesBestStack) {
  const auto s = three_box_scenario();
  const auto cat = enumerate_stacks(s, PhysParams{});
  const auto prefs = PreferenceSet::parse("weight");
  OracleAgent agent(cat, prefs);
  const auto obs = make_observation(s, prefs, "", Mode::offline, 3, StackState::all_on_table(s));
  EXPECT_EQ(replay(obs.state, agent.plan(obs)).stacked, best_achievable(cat, prefs).stack);
}

TEST(OracleAgent, OnlineMatchesOfflineAndNeverUnstacks) {
  const auto sets = benchmark_preference_sets();
  for (std::size_t slot = 0; slot < 10; ++slot) {
    const auto& prefs = sets[slot % sets.size()];
    const auto f = sample_feasible(GenConfig{}, PhysParams{}, prefs, 0.4,
                                   slot_index(SampleStream::eval, slot % sets.size(), slot));
    OracleAgent agent(f.catalog, prefs);
    StackState st = StackState::all_on_table(f.scenario);
    for (std::size_t t = 1; t <= f.scenario.boxes.size(); ++t) {
      const auto plan = agent.plan(make_observation(f.scenario, prefs, "", Mode::online, t, st));
      for (const auto& a : plan.actions) EXPECT_NE(a.kind, Action::Kind::unstack);
      st = replay(st, plan);
      EXPECT_TRUE(st.stacked.empty() || f.catalog.is_stable_prefix(st.stacked));
    }
    EXPECT_EQ(st.stacked, f.best.stack);
  }
}

TEST(OracleAgent, InfeasibleThrows) {
  const auto s = three_box_scenario();
  auto cat = enumerate_stacks(s, PhysParams{});
  cat.completed.clear();
  EXPECT_THROW(OracleAgent(cat, PreferenceSet::parse("weight")), NoStableStack);
}

TEST(GreedyAgent, WaitsWithOneKnownBox) {
  GreedyAgent agent;
  EXPECT_TRUE(agent.plan(observed({{"b1", 1.0}, {"b2", 2.0}}, {}, 1)).is_wait());
}

TEST(GreedyAgent, HeaviestFirstFromEmpty) {
  GreedyAgent agent;
  const auto plan = agent.plan(observed({{"b1", 3.4}, {"b2", 1.2}, {"b3", 0.5}}));
  EXPECT_EQ(render_plan(plan), "stack b1; stack b2; stack b3");
}

TEST(GreedyAgent, UnstacksMisorderedTopFirst) {
  GreedyAgent agent;
  StackState st{{"b3", "b2"}, {"b1"}};
  const auto obs = observed({{"b1", 3.4}, {"b2", 1.2}, {"b3", 0.5}}, st);
  const auto plan = agent.plan(obs);
  EXPECT_EQ(render_plan(plan), "unstack b2; unstack b3; stack b1; stack b2; stack b3");
  EXPECT_EQ(replay(st, plan).stacked, (Sequence{"b1", "b2", "b3"}));
}

TEST(RandomAgent, WaitsThenCommitsToOneOrder) {
  RandomAgent a(5), b(5);
  EXPECT_TRUE(a.plan(observed({{"b1", 1}, {"b2", 2}, {"b3", 3}}, {}, 2)).is_wait());
  const auto obs = observed({{"b1", 1}, {"b2", 2}, {"b3", 3}});
  const auto pa = a.plan(obs);
  EXPECT_EQ(pa, b.plan(obs));
  EXPECT_EQ(pa, a.plan(obs));
  EXPECT_EQ(replay(obs.state, pa).stacked.size(), 3u);
}

TEST(RandomAgent, OrdersAreRoughlyUniform) {
  std::map<std::string, int> counts;
  const auto obs = observed({{"b1", 1}, {"b2", 2}, {"b3", 3}});
  for (std::uint64_t seed = 0; seed < 6000; ++seed) {
    RandomAgent a(seed);
    counts[render_plan(a.plan(obs))]++;
  }
  EXPECT_EQ(counts.size(), 6u);
  for (const auto& [plan, n] : counts) {
    EXPECT_GT(n, 850) << plan;
    EXPECT_LT(n, 1150) << plan;
  }
}

TEST(ScriptedAgent, RepliesInOrderThenWaits) {
  ScriptedAgent agent({"wait", "stack b1", "nonsense"});
  const auto obs = observed({{"b1", 1}});
  EXPECT_TRUE(agent.plan(obs).is_wait());
  EXPECT_EQ(agent.plan(obs), make_plan({Action::stack("b1")}));
  EXPECT_THROW(agent.plan(obs), ParseError);
  EXPECT_TRUE(agent.plan(obs).is_wait());
}
