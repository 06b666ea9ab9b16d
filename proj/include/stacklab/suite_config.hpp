#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "stacklab/agents.hpp"
#include "stacklab/dataset.hpp"
#include "stacklab/eval.hpp"
#include "stacklab/scenario_gen.hpp"
#include "stacklab/stability_sim.hpp"

namespace stacklab {

/// Top-level configuration file of the command line tool. The gen and
/// physics sections are shared by the dataset and eval sections.
struct ToolConfig {
  GenConfig gen;
  PhysParams physics;
  DatasetConfig dataset;
  SuiteConfig eval;
  EndpointConfig endpoint;
  std::string cache_dir = ".stacklab-cache";

  /// Copies the shared sections into dataset and eval.
  void sync();
  /// Reseeds scenario sampling, template choice and episodes from one value.
  void reseed(std::uint64_t seed);
};

nlohmann::ordered_json to_json(const ToolConfig& cfg);
ToolConfig tool_config_from_json(const nlohmann::json& j);

ToolConfig load_tool_config(const std::string& path);
void save_tool_config(const ToolConfig& cfg, const std::string& path);

}  // namespace stacklab
