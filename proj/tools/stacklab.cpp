// Command line front end: scenario generation, catalogs, datasets, evaluation.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stacklab/agents.hpp"
#include "stacklab/dataset.hpp"
#include "stacklab/errors.hpp"
#include "stacklab/eval.hpp"
#include "stacklab/fixtures.hpp"
#include "stacklab/io.hpp"
#include "stacklab/scenario_gen.hpp"
#include "stacklab/stability_sim.hpp"
#include "stacklab/suite_config.hpp"

namespace {

using namespace stacklab;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitIo = 3;

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string config_path;
  std::size_t workers = 1;
  bool no_cache = false;
  std::optional<bool> frozen_noise;
};

ToolConfig resolve_config(const Globals& g) {
  ToolConfig cfg = g.config_path.empty() ? ToolConfig{} : load_tool_config(g.config_path);
  if (g.seed) cfg.reseed(*g.seed);
  if (g.frozen_noise) cfg.eval.frozen_noise = *g.frozen_noise;
  cfg.sync();
  return cfg;
}

std::vector<PreferenceSet> parse_sets(const std::vector<std::string>& items) {
  std::vector<PreferenceSet> out;
  for (const auto& s : items) out.push_back(PreferenceSet::parse(s));
  return out;
}

std::string join_ids(const std::vector<std::string>& ids) {
  std::string out;
  for (const auto& id : ids) out += (out.empty() ? "" : " ") + id;
  return out;
}

/// Scenario from a file, or regenerated from "scn-<index>" with the config.
Scenario find_scenario(const std::string& path, const std::string& scenario_id,
                       const ToolConfig& cfg) {
  if (!path.empty()) return load_scenario(path);
  if (scenario_id.rfind("scn-", 0) == 0) {
    return sample_scenario(cfg.gen, std::stoull(scenario_id.substr(4)));
  }
  if (scenario_id == "three-box") return three_box_scenario();
  throw std::invalid_argument("no scenario given and '" + scenario_id + "' cannot be regenerated");
}

void print_scenario(const Scenario& s) {
  std::printf("scenario %s (seed %llu), reveal order: %s\n", s.id.c_str(),
              static_cast<unsigned long long>(s.seed), join_ids(s.reveal_order).c_str());
  for (const auto& b : s.boxes) {
    const auto p = ground_truth_properties(b);
    std::printf("  %s: %sx%sx%s cm, %zu objects, weight %s kg, stability %s\n", b.id.c_str(),
                format_fixed(b.w * 100, 1).c_str(), format_fixed(b.d * 100, 1).c_str(),
                format_fixed(b.h * 100, 1).c_str(), b.contents.size(),
                format_fixed(p.weight, 2).c_str(), format_fixed(p.stability, 2).c_str());
  }
}

void print_catalog(const StackCatalog& c) {
  std::printf("catalog %s: %zu boxes, %zu stable prefixes, %zu completed stacks\n",
              c.scenario_id.c_str(), c.box_count, c.stable_prefixes.size(), c.completed.size());
  std::printf("  digest %s\n", catalog_digest(c).c_str());
  for (const auto& seq : c.completed) std::printf("  %s\n", join_ids(seq).c_str());
}

void print_episode(const EpisodeResult& r) {
  std::printf("success: %s\n", r.success ? "true" : "false");
  std::printf("failure cause: %s\n", std::string(to_string(r.cause)).c_str());
  if (!r.detail.empty()) std::printf("detail: %s\n", r.detail.c_str());
  std::printf("final stack: %s\n", r.final_stack.empty() ? "empty" : join_ids(r.final_stack).c_str());
  std::printf("actions: %zu\n", r.action_count);
  std::printf("score: %s (best %s, relative %s)\n", format_fixed(r.raw_score, 4).c_str(),
              format_fixed(r.best_score, 4).c_str(), format_fixed(r.relative_score, 4).c_str());
}

AgentFactory make_factory(const ToolConfig& cfg) {
  auto transport = std::make_shared<HttplibTransport>();
  auto limiter = std::make_shared<InFlightLimiter>(cfg.endpoint.max_in_flight);
  const auto key = api_key_from_env();
  const auto endpoint = cfg.endpoint;
  return [=](const std::string& name, const EpisodeContext& ctx) -> std::unique_ptr<Agent> {
    if (name == "llm") {
      return std::make_unique<LlmAgent>(endpoint, transport, limiter, three_box_few_shot(ctx.mode),
                                        key);
    }
    return make_baseline_agent(name, ctx);
  };
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stacklab: box stacking benchmark toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "Master seed for scenarios, templates and episodes");
  app.add_option("--config", g.config_path, "Configuration file (see 'config init')");
  app.add_option("--workers", g.workers, "Worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--no-cache", g.no_cache, "Do not read or write the catalog cache");
  bool frozen = false;
  bool unfrozen = false;
  app.add_flag("--frozen-noise", frozen, "Decide collapses with catalog disturbances (default)");
  app.add_flag("--no-frozen-noise", unfrozen, "Draw fresh placement disturbances per episode")
      ->excludes("--frozen-noise");

  // config init
  auto* config_cmd = app.add_subcommand("config", "Configuration helpers");
  config_cmd->require_subcommand(1);
  auto* init_cmd = config_cmd->add_subcommand("init", "Write the default configuration");
  std::string init_path = "stacklab.json";
  init_cmd->add_option("path", init_path, "Output file");

  // gen
  auto* gen_cmd = app.add_subcommand("gen", "Sample scenarios");
  std::uint64_t gen_first = 0;
  int gen_count = 1;
  std::string gen_out;
  std::string gen_prefs;
  double gen_threshold = kDefaultFeasibilityThreshold;
  gen_cmd->add_option("--first-index", gen_first, "First scenario index");
  gen_cmd->add_option("--count", gen_count, "Number of scenarios")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--out", gen_out, "Directory for scenario JSON files");
  auto* gen_prefs_opt = gen_cmd->add_option("--preferences", gen_prefs,
                                            "Only accept scenarios feasible for this preference set");
  gen_cmd->add_option("--threshold", gen_threshold, "Feasibility threshold")->needs(gen_prefs_opt);

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "Enumerate stable stacks of a scenario");
  std::string sim_scenario;
  std::string sim_out;
  sim_cmd->add_option("scenario", sim_scenario, "Scenario JSON file")->required();
  sim_cmd->add_option("--out", sim_out, "Write the catalog JSON here");

  // dataset
  auto* data_cmd = app.add_subcommand("dataset", "Emit chat training samples as JSONL");
  std::string data_out;
  std::optional<int> data_per_set;
  std::vector<std::string> data_sets;
  bool data_per_prefix = false;
  data_cmd->add_option("--out", data_out, "Output JSONL file")->required();
  data_cmd->add_option("--scenarios-per-set", data_per_set, "Scenarios per preference set");
  data_cmd->add_option("--preferences", data_sets, "Preference sets, e.g. weight,size");
  data_cmd->add_flag("--per-prefix", data_per_prefix, "Also emit one sample per online step");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Run the evaluation suite");
  std::string eval_out;
  std::optional<int> eval_per_set;
  std::vector<std::string> eval_agents;
  std::vector<std::string> eval_sets;
  std::vector<std::string> eval_modes;
  eval_cmd->add_option("--out", eval_out, "Directory for results and metrics");
  eval_cmd->add_option("--scenarios-per-set", eval_per_set, "Scenarios per preference set");
  eval_cmd->add_option("--agents", eval_agents, "oracle, greedy, random or llm")->delimiter(',');
  eval_cmd->add_option("--preferences", eval_sets, "Preference sets, e.g. weight,size");
  eval_cmd->add_option("--modes", eval_modes, "offline and/or online")->delimiter(',');

  // inspect
  auto* inspect_cmd = app.add_subcommand("inspect", "Pretty-print a scenario, catalog or dataset");
  std::string inspect_path;
  std::size_t inspect_line = 1;
  inspect_cmd->add_option("path", inspect_path, "File to inspect")->required();
  inspect_cmd->add_option("--line", inspect_line, "Sample line of a JSONL file (1-based)");

  // replay
  auto* replay_cmd = app.add_subcommand("replay", "Replay plans or a chat sample on a scenario");
  std::string replay_scenario;
  std::vector<std::string> replay_plans;
  std::string replay_sample;
  std::size_t replay_line = 1;
  std::string replay_prefs = "weight";
  std::string replay_mode = "online";
  replay_cmd->add_option("--scenario", replay_scenario, "Scenario JSON file");
  replay_cmd->add_option("--plan", replay_plans, "Plan text for one turn (repeatable)");
  replay_cmd->add_option("--sample", replay_sample, "Dataset JSONL file");
  replay_cmd->add_option("--line", replay_line, "Sample line (1-based)");
  replay_cmd->add_option("--preferences", replay_prefs, "Preference set for --plan");
  replay_cmd->add_option("--mode", replay_mode, "offline or online for --plan");

  // fixtures verify
  auto* fix_cmd = app.add_subcommand("fixtures", "Golden fixtures");
  fix_cmd->require_subcommand(1);
  auto* verify_cmd = fix_cmd->add_subcommand("verify", "Check the golden fixtures");
  std::string fix_dir = "fixtures/v1";
  bool fix_update = false;
  verify_cmd->add_option("--dir", fix_dir, "Fixture directory");
  verify_cmd->add_flag("--update", fix_update, "Rewrite expected outputs instead of checking");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (frozen || unfrozen) g.frozen_noise = frozen;

  try {
    const ToolConfig cfg = resolve_config(g);
    const CatalogCache cache(cfg.cache_dir, !g.no_cache);

    if (init_cmd->parsed()) {
      save_tool_config(cfg, init_path);
      std::printf("wrote %s\n", init_path.c_str());
    } else if (gen_cmd->parsed()) {
      for (int i = 0; i < gen_count; ++i) {
        Scenario s;
        if (gen_prefs.empty()) {
          s = sample_scenario(cfg.gen, gen_first + static_cast<std::uint64_t>(i));
        } else {
          const auto base = slot_index(SampleStream::dataset, 0, static_cast<std::size_t>(i)) + gen_first;
          s = sample_feasible(cfg.gen, cfg.physics, PreferenceSet::parse(gen_prefs), gen_threshold,
                              base, &cache, g.workers)
                  .scenario;
        }
        if (!gen_out.empty()) {
          save_scenario(s, (std::filesystem::path(gen_out) / (s.id + ".json")).string());
        }
        print_scenario(s);
      }
    } else if (sim_cmd->parsed()) {
      const auto scenario = load_scenario(sim_scenario);
      const auto catalog = g.no_cache ? enumerate_stacks(scenario, cfg.physics, g.workers)
                                      : cache.load_or_build(scenario, cfg.physics, g.workers);
      if (!sim_out.empty()) write_json_file(sim_out, catalog);
      print_catalog(catalog);
    } else if (data_cmd->parsed()) {
      DatasetConfig dc = cfg.dataset;
      if (data_per_set) dc.scenarios_per_set = *data_per_set;
      if (!data_sets.empty()) dc.preference_sets = parse_sets(data_sets);
      if (data_per_prefix) dc.emit.per_prefix = true;
      const auto dataset = build_dataset(dc, &cache, g.workers);
      write_dataset(dataset, data_out);
      std::printf("wrote %zu samples from %zu scenarios to %s\n", dataset.samples.size(),
                  dataset.manifest["scenario_count"].get<std::size_t>(), data_out.c_str());
    } else if (eval_cmd->parsed()) {
      SuiteConfig sc = cfg.eval;
      if (eval_per_set) sc.scenarios_per_set = *eval_per_set;
      if (!eval_agents.empty()) sc.agents = eval_agents;
      if (!eval_sets.empty()) sc.preference_sets = parse_sets(eval_sets);
      if (!eval_modes.empty()) {
        sc.modes.clear();
        for (const auto& m : eval_modes) sc.modes.push_back(mode_from_string(m));
      }
      const auto suite = run_suite(sc, make_factory(cfg), &cache, g.workers);
      if (!eval_out.empty()) export_results(suite.results, suite.table, eval_out);
      std::cout << metrics_markdown(suite.table);
    } else if (inspect_cmd->parsed()) {
      if (inspect_path.ends_with(".jsonl")) {
        const auto samples = read_dataset(inspect_path);
        if (inspect_line < 1 || inspect_line > samples.size()) {
          throw std::invalid_argument("--line is outside 1.." + std::to_string(samples.size()));
        }
        const auto& s = samples[inspect_line - 1];
        std::printf("sample %zu of %zu: %s\n", inspect_line, samples.size(), s.meta.dump().c_str());
        for (const auto& m : s.messages) {
          std::printf("[%s]\n%s\n", m.role.c_str(), m.content.c_str());
        }
      } else {
        const auto j = read_json_file(inspect_path);
        if (j.contains("stable_prefixes")) {
          print_catalog(j.get<StackCatalog>());
        } else {
          print_scenario(j.get<Scenario>());
        }
      }
    } else if (replay_cmd->parsed()) {
      std::vector<std::string> replies = replay_plans;
      PreferenceSet prefs = PreferenceSet::parse(replay_prefs);
      Mode mode = mode_from_string(replay_mode);
      std::string scenario_id;
      if (!replay_sample.empty()) {
        const auto samples = read_dataset(replay_sample);
        if (replay_line < 1 || replay_line > samples.size()) {
          throw std::invalid_argument("--line is outside 1.." + std::to_string(samples.size()));
        }
        const auto& s = samples[replay_line - 1];
        replies.clear();
        for (const auto& m : s.messages) {
          if (m.role == "assistant") replies.push_back(m.content);
        }
        prefs = PreferenceSet::parse(s.meta.at("preferences").get<std::string>());
        const auto form = s.meta.at("form").get<std::string>();
        if (form == "prefix") throw std::invalid_argument("single-step samples cannot be replayed");
        mode = mode_from_string(form);
        scenario_id = s.meta.at("scenario_id").get<std::string>();
      } else if (replay_scenario.empty()) {
        scenario_id = "three-box";
      }
      if (replies.empty()) throw std::invalid_argument("replay needs --plan or --sample");
      const auto scenario = find_scenario(replay_scenario, scenario_id, cfg);
      const auto catalog = cache.load_or_build(scenario, cfg.physics, g.workers);
      ScriptedAgent agent(replies);
      EpisodeOptions options;
      options.frozen_noise = cfg.eval.frozen_noise;
      options.seed = cfg.eval.episode_seed;
      const auto r = run_episode(scenario, catalog, prefs, agent, mode, cfg.physics, options);
      print_episode(r);
    } else if (verify_cmd->parsed()) {
      if (fix_update) {
        update_fixtures(fix_dir, g.workers);
        std::printf("updated fixtures in %s\n", fix_dir.c_str());
      } else {
        const auto report = verify_fixtures(fix_dir, g.workers);
        std::cout << report.summary();
        report.require_all_passed();
      }
    }
    return kExitOk;
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitIo;
  } catch (const GenExhausted& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInfeasible;
  } catch (const NoStableStack& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInfeasible;
  } catch (const FixtureMismatch& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }
}
