#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "config.hpp"

namespace memaudit::cli {

// Shared state for one CLI invocation: resolved output directory plus the run
// manifest (config snapshot, derived seeds, artifact hashes) written at the
// end of every successful stage.
struct RunContext {
  ExperimentConfig cfg;
  std::filesystem::path out_dir;
  nlohmann::json seeds = nlohmann::json::object();
  nlohmann::json artifacts = nlohmann::json::array();

  std::filesystem::path path_of(const std::string& name) const;
  void note_artifact(const std::string& name);
  void write_manifest(const std::string& subcommand);
};

int cmd_train(RunContext& ctx);
int cmd_generate(RunContext& ctx);
int cmd_extract(RunContext& ctx);
int cmd_mia(RunContext& ctx);
int cmd_sweep_t(RunContext& ctx);
int cmd_progress(RunContext& ctx);
int cmd_inpaint(RunContext& ctx);
int cmd_dedup(RunContext& ctx);
int cmd_canary(RunContext& ctx);
int cmd_report(RunContext& ctx);

}  // namespace memaudit::cli
