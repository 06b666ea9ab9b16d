#include "stacklab/suite_config.hpp"

#include <stdexcept>

#include "stacklab/errors.hpp"
#include "stacklab/io.hpp"

namespace stacklab {

namespace {

// Section keys that live at the top level instead of inside dataset/eval.
nlohmann::json without_shared(nlohmann::json j) {
  j.erase("gen");
  j.erase("physics");
  return j;
}

}  // namespace

void ToolConfig::sync() {
  dataset.gen = gen;
  dataset.physics = physics;
  eval.gen = gen;
  eval.physics = physics;
}

void ToolConfig::reseed(std::uint64_t seed) {
  gen.master_seed = seed;
  dataset.template_seed = seed;
  eval.episode_seed = seed;
  sync();
}

nlohmann::ordered_json to_json(const ToolConfig& cfg) {
  nlohmann::ordered_json j;
  j["gen"] = nlohmann::json(cfg.gen);
  j["physics"] = nlohmann::json(cfg.physics);
  j["dataset"] = without_shared(nlohmann::json(cfg.dataset));
  j["eval"] = without_shared(nlohmann::json(cfg.eval));
  j["endpoint"] = nlohmann::json(cfg.endpoint);
  j["cache_dir"] = cfg.cache_dir;
  return j;
}

ToolConfig tool_config_from_json(const nlohmann::json& j) {
  ToolConfig cfg;
  if (j.contains("gen")) cfg.gen = j["gen"].get<GenConfig>();
  if (j.contains("physics")) cfg.physics = j["physics"].get<PhysParams>();
  if (j.contains("dataset")) cfg.dataset = without_shared(j["dataset"]).get<DatasetConfig>();
  if (j.contains("eval")) cfg.eval = without_shared(j["eval"]).get<SuiteConfig>();
  if (j.contains("endpoint")) cfg.endpoint = j["endpoint"].get<EndpointConfig>();
  cfg.cache_dir = j.value("cache_dir", cfg.cache_dir);
  cfg.sync();
  return cfg;
}

ToolConfig load_tool_config(const std::string& path) {
  const auto j = read_json_file(path);
  try {
    return tool_config_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path, std::string("invalid config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw IoError(path, std::string("invalid config: ") + e.what());
  }
}

void save_tool_config(const ToolConfig& cfg, const std::string& path) {
  write_text_file(path, to_json(cfg).dump(2) + "\n");
}

}  // namespace stacklab
