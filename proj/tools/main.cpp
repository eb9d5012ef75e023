#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "memaudit/error.hpp"
#include "memaudit/parallel.hpp"
#include "stages.hpp"

namespace {

using memaudit::cli::RunContext;

int exit_code_for(memaudit::ErrorCategory c) {
  switch (c) {
    case memaudit::ErrorCategory::Config: return 2;
    case memaudit::ErrorCategory::Argument: return 3;
    case memaudit::ErrorCategory::Format: return 4;
    case memaudit::ErrorCategory::State: return 5;
    case memaudit::ErrorCategory::Degenerate: return 6;
    case memaudit::ErrorCategory::Training: return 7;
  }
  return 1;
}

std::filesystem::path resolve_out_dir(const std::string& out_flag,
                                      const std::string& config_out) {
  if (!out_flag.empty()) return out_flag;
  const char* root = std::getenv("MEMAUDIT_OUT");
  std::filesystem::path base = root && *root ? root : ".";
  return base / config_out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Train small diffusion models and audit them for training-data "
               "memorization: extraction, membership inference, inpainting "
               "reconstruction, deduplication and canary exposure."};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_flag;
  std::uint64_t seed_flag = 0;
  bool seed_set = false;
  std::vector<std::string> overrides;
  unsigned threads = 0;
  bool deterministic = false;

  app.add_option("--config", config_path, "Experiment config (JSON)");
  app.add_option("--out", out_flag, "Output directory (overrides config and $MEMAUDIT_OUT)");
  app.add_option("--seed", seed_flag, "Master seed override")
      ->each([&](const std::string&) { seed_set = true; });
  app.add_option("--set", overrides,
                 "Dotted-path config override, e.g. train.steps=4000");
  app.add_option("--threads", threads, "Worker thread count (0 = hardware)");
  app.add_flag("--deterministic", deterministic,
               "Force single-threaded execution");

  const std::map<std::string, std::function<int(RunContext&)>> stages = {
      {"train", memaudit::cli::cmd_train},
      {"generate", memaudit::cli::cmd_generate},
      {"extract", memaudit::cli::cmd_extract},
      {"mia", memaudit::cli::cmd_mia},
      {"sweep-t", memaudit::cli::cmd_sweep_t},
      {"progress", memaudit::cli::cmd_progress},
      {"inpaint", memaudit::cli::cmd_inpaint},
      {"dedup", memaudit::cli::cmd_dedup},
      {"canary", memaudit::cli::cmd_canary},
      {"report", memaudit::cli::cmd_report},
  };
  const std::map<std::string, std::string> blurbs = {
      {"train", "Train a denoising model and write checkpoints"},
      {"generate", "Sample images from a checkpoint"},
      {"extract", "Untargeted training-data extraction scan"},
      {"mia", "LiRA and loss-threshold membership inference"},
      {"sweep-t", "Membership attack strength across timesteps"},
      {"progress", "Membership attack strength across training checkpoints"},
      {"inpaint", "Inpainting reconstruction attack with contrastive scoring"},
      {"dedup", "Near-duplicate removal and its effect on extraction"},
      {"canary", "Canary insertion and exposure audit"},
      {"report", "Derived tables (precision-recall) for a finished run"},
  };
  for (const auto& [name, blurb] : blurbs)
    app.add_subcommand(name, blurb)->fallthrough();

  CLI11_PARSE(app, argc, argv);
  const std::string subcommand = app.get_subcommands().front()->get_name();

  try {
    RunContext ctx;
    ctx.cfg = config_path.empty()
                  ? memaudit::cli::ExperimentConfig::defaults()
                  : memaudit::cli::ExperimentConfig::load(config_path);
    for (const std::string& kv : overrides) ctx.cfg.apply_override(kv);
    if (seed_set) ctx.cfg.doc["seed"] = seed_flag;
    ctx.cfg.validate();

    memaudit::global_thread_count() = deterministic ? 1 : threads;

    ctx.out_dir = resolve_out_dir(out_flag, ctx.cfg.out_name());
    std::filesystem::create_directories(ctx.out_dir);

    return stages.at(subcommand)(ctx);
  } catch (const memaudit::Error& e) {
    std::cerr << "error[" << memaudit::to_string(e.category()) << "]: "
              << e.what() << "\n";
    return exit_code_for(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
