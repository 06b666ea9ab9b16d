#include "stacklab/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <tuple>

#include "stacklab/errors.hpp"
#include "stacklab/parallel.hpp"
#include "stacklab/rng.hpp"

namespace stacklab {

std::string_view to_string(FailureCause cause) {
  switch (cause) {
    case FailureCause::none:
      return "none";
    case FailureCause::collapse:
      return "collapse";
    case FailureCause::incomplete:
      return "incomplete";
    case FailureCause::parse:
      return "parse";
    case FailureCause::illegal:
      return "illegal";
    case FailureCause::endpoint:
      return "endpoint";
  }
  return "none";
}

FailureCause failure_cause_from_string(std::string_view text) {
  for (auto c : {FailureCause::none, FailureCause::collapse, FailureCause::incomplete,
                 FailureCause::parse, FailureCause::illegal, FailureCause::endpoint}) {
    if (to_string(c) == text) return c;
  }
  throw std::invalid_argument("unknown failure cause: " + std::string(text));
}

namespace {

// Measurement noise stays fixed within an episode, so re-reading a box
// returns the same values.
constexpr std::uint64_t kMeasurementStream = 0x6d65617375726531ULL;

}  // namespace

EpisodeResult run_episode(const Scenario& scenario, const StackCatalog& catalog,
                          const PreferenceSet& prefs, Agent& agent, Mode mode,
                          const PhysParams& physics, const EpisodeOptions& options) {
  const std::size_t box_count = scenario.boxes.size();
  const auto budget = static_cast<std::size_t>(std::ceil(options.budget_factor * box_count));
  if (budget < box_count) {
    throw std::invalid_argument("action budget must allow at least one action per box");
  }

  EpisodeResult r;
  r.scenario_id = scenario.id;
  r.preferences = prefs.to_string();
  r.agent = agent.id();
  r.mode = mode;
  r.box_count = box_count;
  r.best_score = best_achievable(catalog, prefs).score;
  const auto [template_id, text] =
      render_preference(prefs, TemplateSplit::eval, options.template_key);
  r.template_id = template_id;

  const auto noise_key = combine_key(options.seed, kMeasurementStream);
  StackState state = StackState::all_on_table(scenario);
  PhysStack phys;
  bool done = false;

  auto fail = [&](FailureCause cause, std::string detail) {
    r.cause = cause;
    r.detail = std::move(detail);
    done = true;
  };

  for (std::size_t turn = 1; !done; ++turn) {
    const std::size_t revealed = mode == Mode::offline ? box_count : std::min(turn, box_count);
    const auto obs = make_observation(scenario, prefs, text, mode, revealed, state,
                                      options.noise, noise_key);
    Plan plan;
    try {
      plan = agent.plan(obs);
    } catch (const ParseError& e) {
      fail(FailureCause::parse, e.what());
      break;
    } catch (const EndpointError& e) {
      fail(FailureCause::endpoint, e.what());
      break;
    }
    r.replies.push_back(render_plan(plan));

    if (!plan.is_wait()) {
      for (const auto& action : plan.actions) {
        if (action.kind == Action::Kind::wait) continue;
        if (r.action_count >= budget) {
          fail(FailureCause::incomplete, "action budget of " + std::to_string(budget) + " exhausted");
          break;
        }
        ++r.action_count;
        try {
          state = apply_action(state, action);
        } catch (const IllegalAction& e) {
          fail(FailureCause::illegal, e.what());
          break;
        }
        if (action.kind == Action::Kind::unstack) {
          if (!options.frozen_noise) phys.boxes.pop_back();
          continue;
        }
        bool stable = false;
        if (options.frozen_noise) {
          stable = catalog.is_stable_prefix(state.stacked);
        } else {
          auto placed = place_box(phys, action.box, scenario, physics, options.seed);
          stable = placed.ok();
          if (stable) phys = std::move(*placed.stack);
        }
        if (!stable) {
          state.stacked.pop_back();
          state.on_table.insert(action.box);
          fail(FailureCause::collapse, "stack collapsed when placing " + action.box);
          break;
        }
      }
    }

    // Offline planning is a single request; online ends when the agent
    // stops acting after the final reveal.
    if (mode == Mode::offline || (revealed == box_count && plan.is_wait())) break;
  }

  r.final_stack = state.stacked;
  if (r.cause == FailureCause::none && !state.complete()) {
    r.cause = FailureCause::incomplete;
    r.detail = std::to_string(state.on_table.size()) + " boxes left on the table";
  }
  r.success = r.cause == FailureCause::none;
  r.raw_score = r.final_stack.empty() ? 0.0 : joint_score(r.final_stack, prefs, catalog.props);
  r.relative_score = r.best_score > 0.0 ? std::clamp(r.raw_score / r.best_score, 0.0, 1.0) : 1.0;
  r.success_scaled = r.success ? r.relative_score : 0.0;
  return r;
}

std::unique_ptr<Agent> make_baseline_agent(const std::string& agent, const EpisodeContext& ctx) {
  if (agent == "oracle") return std::make_unique<OracleAgent>(ctx.catalog, ctx.prefs);
  if (agent == "greedy") return std::make_unique<GreedyAgent>();
  if (agent == "random") return std::make_unique<RandomAgent>(ctx.seed);
  throw std::invalid_argument("unknown agent: " + agent);
}

void to_json(nlohmann::json& j, const SuiteConfig& c) {
  std::vector<std::string> sets;
  for (const auto& p : c.preference_sets) sets.push_back(p.to_string());
  std::vector<std::string> modes;
  for (auto m : c.modes) modes.emplace_back(to_string(m));
  j = nlohmann::json{{"gen", c.gen},
                     {"physics", c.physics},
                     {"noise", {{"weight_sigma", c.noise.weight_sigma},
                                {"stability_sigma", c.noise.stability_sigma}}},
                     {"preference_sets", sets},
                     {"agents", c.agents},
                     {"modes", modes},
                     {"scenarios_per_set", c.scenarios_per_set},
                     {"threshold", c.threshold},
                     {"frozen_noise", c.frozen_noise},
                     {"budget_factor", c.budget_factor},
                     {"episode_seed", c.episode_seed}};
}

void from_json(const nlohmann::json& j, SuiteConfig& c) {
  const SuiteConfig d;
  c = d;
  if (j.contains("gen")) c.gen = j["gen"].get<GenConfig>();
  if (j.contains("physics")) c.physics = j["physics"].get<PhysParams>();
  if (j.contains("noise")) {
    c.noise.weight_sigma = j["noise"].value("weight_sigma", 0.0);
    c.noise.stability_sigma = j["noise"].value("stability_sigma", 0.0);
  }
  if (j.contains("preference_sets")) {
    c.preference_sets.clear();
    for (const auto& s : j["preference_sets"]) {
      c.preference_sets.push_back(PreferenceSet::parse(s.get<std::string>()));
    }
  }
  c.agents = j.value("agents", d.agents);
  if (j.contains("modes")) {
    c.modes.clear();
    for (const auto& m : j["modes"]) c.modes.push_back(mode_from_string(m.get<std::string>()));
  }
  c.scenarios_per_set = j.value("scenarios_per_set", d.scenarios_per_set);
  c.threshold = j.value("threshold", d.threshold);
  c.frozen_noise = j.value("frozen_noise", d.frozen_noise);
  c.budget_factor = j.value("budget_factor", d.budget_factor);
  c.episode_seed = j.value("episode_seed", d.episode_seed);
  if (c.scenarios_per_set < 0) throw std::invalid_argument("scenarios_per_set must be >= 0");
  if (c.budget_factor < 1.0) throw std::invalid_argument("budget_factor must be >= 1");
  if (c.noise.weight_sigma < 0.0 || c.noise.stability_sigma < 0.0) {
    throw std::invalid_argument("noise sigmas must be >= 0");
  }
}

const MetricsRow* MetricsTable::find(const std::string& preferences, const std::string& agent,
                                     Mode mode, std::size_t box_count) const {
  for (const auto& row : rows) {
    if (row.preferences == preferences && row.agent == agent && row.mode == mode &&
        row.box_count == box_count) {
      return &row;
    }
  }
  return nullptr;
}

MetricsTable aggregate(const std::vector<EpisodeResult>& results) {
  // Canonical order first, so floating-point sums do not depend on the
  // order in which episodes finished.
  std::vector<const EpisodeResult*> sorted;
  sorted.reserve(results.size());
  for (const auto& r : results) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(), [](const EpisodeResult* a, const EpisodeResult* b) {
    return std::tie(a->preferences, a->agent, a->mode, a->scenario_id, a->box_count,
                    a->relative_score, a->success) < std::tie(b->preferences, b->agent, b->mode,
                                                              b->scenario_id, b->box_count,
                                                              b->relative_score, b->success);
  });

  struct Acc {
    std::size_t episodes = 0;
    std::size_t successes = 0;
    double relative_sum = 0.0;
  };
  using Key = std::tuple<int, std::string, std::string, Mode, std::size_t>;
  std::map<Key, Acc> acc;
  for (const auto* r : sorted) {
    for (std::size_t bc : {r->box_count, std::size_t{0}}) {
      for (int group : {0, 1}) {
        auto& a = acc[{group, group == 0 ? r->preferences : "all", r->agent, r->mode, bc}];
        ++a.episodes;
        if (r->success) {
          ++a.successes;
          a.relative_sum += r->relative_score;
        }
      }
    }
  }

  MetricsTable table;
  for (const auto& [key, a] : acc) {
    MetricsRow row;
    row.preferences = std::get<1>(key);
    row.agent = std::get<2>(key);
    row.mode = std::get<3>(key);
    row.box_count = std::get<4>(key);
    row.cell.episodes = a.episodes;
    row.cell.successes = a.successes;
    const auto n = static_cast<double>(a.episodes);
    row.cell.success_rate = static_cast<double>(a.successes) / n;
    if (a.successes > 0) {
      row.cell.preference_score = a.relative_sum / static_cast<double>(a.successes);
    }
    row.cell.success_scaled = a.relative_sum / n;
    table.rows.push_back(std::move(row));
  }
  return table;
}

SuiteResult run_suite(const SuiteConfig& cfg, const AgentFactory& factory,
                      const CatalogCache* cache, std::size_t workers) {
  SuiteResult out;
  for (std::size_t s = 0; s < cfg.preference_sets.size(); ++s) {
    for (int n = 0; n < cfg.scenarios_per_set; ++n) {
      out.scenarios.push_back({s, static_cast<std::size_t>(n), {}});
    }
  }
  parallel_for(out.scenarios.size(), workers, [&](std::size_t i) {
    auto& sc = out.scenarios[i];
    sc.feasible = sample_feasible(cfg.gen, cfg.physics, cfg.preference_sets[sc.set], cfg.threshold,
                                  slot_index(SampleStream::eval, sc.set, sc.slot), cache, 1);
  });

  struct Job {
    std::size_t scenario;
    std::size_t agent;
    Mode mode;
  };
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < out.scenarios.size(); ++i) {
    for (std::size_t a = 0; a < cfg.agents.size(); ++a) {
      for (auto m : cfg.modes) jobs.push_back({i, a, m});
    }
  }
  out.results.resize(jobs.size());
  parallel_for(jobs.size(), workers, [&](std::size_t i) {
    const auto& job = jobs[i];
    const auto& sc = out.scenarios[job.scenario];
    const auto& prefs = cfg.preference_sets[sc.set];
    const auto& name = cfg.agents[job.agent];
    const auto scenario_seed =
        combine_key(cfg.episode_seed, slot_index(SampleStream::eval, sc.set, sc.slot));

    const EpisodeContext ctx{sc.feasible.scenario, sc.feasible.catalog, prefs, job.mode,
                             combine_key(scenario_seed, hash_bytes(name + "/" +
                                                                   std::string(to_string(job.mode))))};
    auto agent = factory(name, ctx);
    EpisodeOptions options;
    options.frozen_noise = cfg.frozen_noise;
    options.budget_factor = cfg.budget_factor;
    options.noise = cfg.noise;
    // Shared by every agent on this scenario, so they face the same
    // disturbances, measurements and preference wording.
    options.seed = scenario_seed;
    options.template_key = combine_key(scenario_seed, 1);
    out.results[i] = run_episode(sc.feasible.scenario, sc.feasible.catalog, prefs, *agent,
                                 job.mode, cfg.physics, options);
    out.results[i].agent = name;
  });

  out.table = aggregate(out.results);
  return out;
}

}  // namespace stacklab
