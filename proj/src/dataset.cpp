#include "stacklab/dataset.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "stacklab/errors.hpp"
#include "stacklab/io.hpp"
#include "stacklab/parallel.hpp"
#include "stacklab/rng.hpp"

namespace stacklab {

namespace {

Sequence restrict_to(const Sequence& seq, const std::set<std::string>& keep) {
  Sequence out;
  for (const auto& id : seq) {
    if (keep.contains(id)) out.push_back(id);
  }
  return out;
}

/// Best of `pool` by (apparent score, full score, lexicographic order).
Sequence pick_target(const std::vector<Sequence>& pool, const PreferenceSet& prefs,
                     const PropertyTable& props) {
  const bool has_apparent = prefs.has_apparent();
  const PreferenceSet apparent = has_apparent ? prefs.apparent() : PreferenceSet{};
  const Sequence* best = nullptr;
  double best_apparent = 0.0;
  double best_full = 0.0;
  for (const auto& seq : pool) {
    const double a = has_apparent ? joint_score(seq, apparent, props) : 0.0;
    const double f = joint_score(seq, prefs, props);
    if (!best || std::tie(a, f) > std::tie(best_apparent, best_full) ||
        (a == best_apparent && f == best_full && seq < *best)) {
      best = &seq;
      best_apparent = a;
      best_full = f;
    }
  }
  if (!best) throw NoStableStack("no completed stable stack to aim for");
  return *best;
}

}  // namespace

std::vector<Action> Trajectory::all_actions() const {
  std::vector<Action> out;
  for (const auto& step : steps) {
    out.insert(out.end(), step.actions.begin(), step.actions.end());
  }
  return out;
}

Sequence select_target(const StackCatalog& catalog, const PreferenceSet& prefs,
                       const PropertyTable& props) {
  if (catalog.completed.empty()) {
    throw NoStableStack("scenario " + catalog.scenario_id + " has no completed stable stack");
  }
  return pick_target(catalog.completed, prefs, props);
}

Trajectory build_trajectory(const Scenario& scenario, const StackCatalog& catalog,
                            const PreferenceSet& prefs, std::optional<Sequence> initial_target) {
  check_closure(catalog);
  const auto& props = catalog.props;
  Sequence target = initial_target ? *initial_target : select_target(catalog, prefs, props);
  if (!std::binary_search(catalog.completed.begin(), catalog.completed.end(), target)) {
    throw std::invalid_argument("initial target is not a completed stable stack");
  }

  Trajectory traj;
  traj.scenario_id = scenario.id;
  traj.prefs = prefs;
  traj.initial_target = target;

  Sequence current;
  std::set<std::string> known;
  const std::size_t box_count = scenario.reveal_order.size();
  for (const auto& box_id : scenario.reveal_order) {
    TrajectoryStep step;
    step.reveal = measure(scenario.box(box_id), {}, 0);
    step.stack_before = current;
    known.insert(box_id);

    // With a single measured box there is nothing to order yet.
    if (known.size() >= 2 || known.size() == box_count) {
      std::set<Sequence> candidates;
      for (const auto& a : catalog.completed) {
        auto r = restrict_to(a, known);
        if (catalog.is_stable_prefix(r)) candidates.insert(std::move(r));
      }
      if (!candidates.empty()) {
        const Sequence base = restrict_to(target, known);
        const bool base_ok = candidates.contains(base);
        const Sequence* best = nullptr;
        double best_score = 0.0;
        for (const auto& c : candidates) {
          const double s = joint_score(c, prefs, props);
          if (!best || s > best_score) {
            best = &c;
            best_score = s;
          }
        }
        Sequence chosen = base;
        if (!base_ok || best_score > joint_score(base, prefs, props)) {
          chosen = *best;
          std::vector<Sequence> extensions;
          for (const auto& a : catalog.completed) {
            if (restrict_to(a, known) == chosen) extensions.push_back(a);
          }
          auto next = pick_target(extensions, prefs, props);
          step.switched = next != target;
          target = std::move(next);
        }
        step.actions = conversion_actions(current, chosen);
        current = std::move(chosen);
      }
    }
    step.stack_after = current;
    traj.steps.push_back(std::move(step));
  }

  traj.final_stack = current;
  traj.final_score = current.empty() ? 0.0 : joint_score(current, prefs, props);
  traj.best_stack = best_achievable(catalog, prefs, props).stack;
  return traj;
}

namespace {

ChatMessage user(std::string text) { return {"user", std::move(text)}; }
ChatMessage assistant(std::string text) { return {"assistant", std::move(text)}; }

nlohmann::ordered_json base_meta(const Scenario& scenario, const Trajectory& traj,
                                 int template_id, const char* form) {
  nlohmann::ordered_json meta;
  meta["scenario_id"] = scenario.id;
  meta["preferences"] = traj.prefs.to_string();
  meta["form"] = form;
  meta["template_id"] = template_id;
  meta["box_count"] = scenario.boxes.size();
  return meta;
}

}  // namespace

std::vector<ChatSample> emit_samples(const Scenario& scenario, const Trajectory& traj,
                                     std::uint64_t template_key, const EmitOptions& options) {
  if (traj.steps.size() != scenario.reveal_order.size()) {
    throw std::invalid_argument("trajectory does not belong to scenario " + scenario.id);
  }
  const auto [template_id, text] = render_preference(traj.prefs, TemplateSplit::train, template_key);
  std::vector<ChatSample> out;

  if (options.offline) {
    ChatSample s;
    const auto obs = make_observation(scenario, traj.prefs, text, Mode::offline,
                                      scenario.boxes.size(), StackState::all_on_table(scenario));
    s.messages.push_back(user(render_observation(obs)));
    s.messages.push_back(assistant(render_actions(conversion_actions({}, traj.best_stack))));
    s.meta = base_meta(scenario, traj, template_id, "offline");
    s.meta["final_stack"] = traj.best_stack;
    out.push_back(std::move(s));
  }

  std::vector<std::pair<ChatMessage, ChatMessage>> turns;
  StackState state = StackState::all_on_table(scenario);
  for (std::size_t j = 0; j < traj.steps.size(); ++j) {
    const auto& step = traj.steps[j];
    const auto obs = make_observation(scenario, traj.prefs, text, Mode::online, j + 1, state);
    turns.emplace_back(user(render_observation(obs)), assistant(render_actions(step.actions)));
    for (const auto& a : step.actions) state = apply_action(state, a);
  }

  if (options.online) {
    ChatSample s;
    for (const auto& [u, a] : turns) {
      s.messages.push_back(u);
      s.messages.push_back(a);
    }
    s.meta = base_meta(scenario, traj, template_id, "online");
    s.meta["final_stack"] = traj.final_stack;
    out.push_back(std::move(s));
  }

  if (options.per_prefix) {
    for (std::size_t j = 0; j < turns.size(); ++j) {
      ChatSample s;
      s.messages = {turns[j].first, turns[j].second};
      s.meta = base_meta(scenario, traj, template_id, "prefix");
      s.meta["step"] = j + 1;
      out.push_back(std::move(s));
    }
  }
  return out;
}

nlohmann::ordered_json to_json_line(const ChatSample& sample) {
  nlohmann::ordered_json j;
  j["messages"] = nlohmann::ordered_json::array();
  for (const auto& m : sample.messages) {
    nlohmann::ordered_json msg;
    msg["role"] = m.role;
    msg["content"] = m.content;
    j["messages"].push_back(std::move(msg));
  }
  j["meta"] = sample.meta;
  return j;
}

ChatSample chat_sample_from_json(const nlohmann::ordered_json& j) {
  ChatSample s;
  for (const auto& m : j.at("messages")) {
    s.messages.push_back({m.at("role").get<std::string>(), m.at("content").get<std::string>()});
  }
  s.meta = j.value("meta", nlohmann::ordered_json::object());
  return s;
}

void to_json(nlohmann::json& j, const DatasetConfig& c) {
  std::vector<std::string> sets;
  for (const auto& p : c.preference_sets) sets.push_back(p.to_string());
  j = nlohmann::json{{"gen", c.gen},
                     {"physics", c.physics},
                     {"preference_sets", sets},
                     {"scenarios_per_set", c.scenarios_per_set},
                     {"threshold", c.threshold},
                     {"template_seed", c.template_seed},
                     {"online", c.emit.online},
                     {"offline", c.emit.offline},
                     {"per_prefix", c.emit.per_prefix}};
}

void from_json(const nlohmann::json& j, DatasetConfig& c) {
  const DatasetConfig defaults;
  c = defaults;
  if (j.contains("gen")) c.gen = j["gen"].get<GenConfig>();
  if (j.contains("physics")) c.physics = j["physics"].get<PhysParams>();
  if (j.contains("preference_sets")) {
    c.preference_sets.clear();
    for (const auto& s : j["preference_sets"]) {
      c.preference_sets.push_back(PreferenceSet::parse(s.get<std::string>()));
    }
  }
  c.scenarios_per_set = j.value("scenarios_per_set", defaults.scenarios_per_set);
  c.threshold = j.value("threshold", defaults.threshold);
  c.template_seed = j.value("template_seed", defaults.template_seed);
  c.emit.online = j.value("online", defaults.emit.online);
  c.emit.offline = j.value("offline", defaults.emit.offline);
  c.emit.per_prefix = j.value("per_prefix", defaults.emit.per_prefix);
  if (c.scenarios_per_set < 0) throw std::invalid_argument("scenarios_per_set must be >= 0");
}

Dataset build_dataset(const DatasetConfig& cfg, const CatalogCache* cache, std::size_t workers) {
  struct Job {
    std::size_t set;
    std::size_t slot;
    FeasibleScenario feasible;
    std::vector<ChatSample> samples;
  };
  std::vector<Job> jobs;
  for (std::size_t s = 0; s < cfg.preference_sets.size(); ++s) {
    for (int n = 0; n < cfg.scenarios_per_set; ++n) {
      jobs.push_back({s, static_cast<std::size_t>(n), {}, {}});
    }
  }

  parallel_for(jobs.size(), workers, [&](std::size_t i) {
    auto& job = jobs[i];
    const auto& prefs = cfg.preference_sets[job.set];
    const auto first = slot_index(SampleStream::dataset, job.set, job.slot);
    job.feasible = sample_feasible(cfg.gen, cfg.physics, prefs, cfg.threshold, first, cache, 1);
    const auto traj = build_trajectory(job.feasible.scenario, job.feasible.catalog, prefs);
    job.samples = emit_samples(job.feasible.scenario, traj, combine_key(cfg.template_seed, first),
                               cfg.emit);
  });

  Dataset out;
  auto scenarios = nlohmann::ordered_json::array();
  for (auto& job : jobs) {
    nlohmann::ordered_json entry;
    entry["preferences"] = cfg.preference_sets[job.set].to_string();
    entry["slot"] = job.slot;
    entry["scenario_id"] = job.feasible.scenario.id;
    entry["attempts"] = job.feasible.attempts;
    entry["best_score"] = job.feasible.best.score;
    scenarios.push_back(std::move(entry));
    for (auto& s : job.samples) out.samples.push_back(std::move(s));
  }

  const nlohmann::json config_json = cfg;
  out.manifest["format"] = "stacklab-chat-v1";
  out.manifest["config_hash"] = hex64(hash_bytes(config_json.dump()));
  out.manifest["config"] = nlohmann::ordered_json::parse(config_json.dump());
  out.manifest["master_seed"] = cfg.gen.master_seed;
  out.manifest["template_seed"] = cfg.template_seed;
  out.manifest["template_bank_version"] = TemplateBank::builtin().version();
  out.manifest["sample_count"] = out.samples.size();
  out.manifest["scenario_count"] = jobs.size();
  out.manifest["scenarios"] = std::move(scenarios);
  return out;
}

void write_dataset(const Dataset& dataset, const std::string& path) {
  std::string text;
  for (const auto& s : dataset.samples) {
    text += to_json_line(s).dump();
    text += '\n';
  }
  write_text_file(path, text);
  write_text_file(path + ".manifest.json", dataset.manifest.dump(2) + "\n");
}

std::vector<ChatSample> read_dataset(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::vector<ChatSample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(chat_sample_from_json(nlohmann::ordered_json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw IoError(path, "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace stacklab
