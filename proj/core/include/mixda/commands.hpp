#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mixda/checkpoint.hpp"
#include "mixda/metrics.hpp"
#include "mixda/runconfig.hpp"
#include "mixda/train.hpp"

namespace mixda::commands {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitCheckpoint = 4;

struct Stage1Artifacts {
  std::filesystem::path checkpoint;
  std::filesystem::path loss_csv;
};

// Builds the vocabulary and model, runs Stage 1, writes the adapter-only
// checkpoint and the per-step loss CSV under [run] output_dir.
Stage1Artifacts stage1(const std::filesystem::path& config_path);

struct SeedRun {
  std::uint64_t seed = 0;
  double test_metric = 0.0;
  int best_epoch = -1;
  double best_val = 0.0;
  std::filesystem::path checkpoint;
};

struct Stage2Artifacts {
  std::vector<SeedRun> runs;
  SeedAggregate aggregate;
  std::filesystem::path aggregate_csv;
  std::filesystem::path report_txt;
};

// Loads 0..N adapter checkpoints (defining expert slots 0..N-1; the FFN is
// the last expert), trains gate + task adapters per seed, aggregates.
Stage2Artifacts stage2(const std::filesystem::path& config_path,
                       const std::vector<std::filesystem::path>& adapters);

struct EvalArtifacts {
  MetricReport report;
  std::size_t examples = 0;
  std::filesystem::path metrics_csv;
  std::filesystem::path gate_csv;  // empty when the model has no gate
};

EvalArtifacts eval(const std::filesystem::path& checkpoint_path,
                   const std::filesystem::path& data_path, const std::string& metric,
                   const std::filesystem::path& out_dir);

enum class AblateMode { no_moa, no_old, no_da };

AblateMode parse_ablate_mode(const std::string& name);
std::string ablate_mode_name(AblateMode mode);

// Runs both stages under the ablation: no-moa drops the gate and routes
// through the adapter; no-old drops the general half and the alignment loss;
// no-da drops domain adapters entirely and trains task adapters in both
// stages.
Stage2Artifacts ablate(const std::filesystem::path& config_path, AblateMode mode);

struct GridArtifacts {
  GridResult result;
  std::filesystem::path grid_csv;
  std::filesystem::path best_txt;
};

GridArtifacts grid(const std::filesystem::path& config_path,
                   const std::vector<std::filesystem::path>& adapters);

// Maps the active exception to an exit code and prints it to stderr.
int handle_command_errors();

}  // namespace mixda::commands
