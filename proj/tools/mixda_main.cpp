#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mixda/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"mixda: parallel domain adapters with a mixture-of-adapters gate"};
  app.require_subcommand(1);

  std::string config_path, checkpoint_path, data_path, metric = "micro-f1";
  std::string ablate_mode, out_dir = "eval_out";
  std::vector<std::string> adapter_paths;

  CLI::App* stage1 = app.add_subcommand("stage1", "Train a domain adapter on unlabeled data");
  stage1->add_option("--config", config_path, "Run configuration file")->required();

  CLI::App* stage2 =
      app.add_subcommand("stage2", "Train the MoA gate and task adapter on labeled data");
  stage2->add_option("--config", config_path, "Run configuration file")->required();
  stage2->add_option("--adapter", adapter_paths,
                     "Adapter checkpoint(s); load order defines expert slots");

  CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint on labeled data");
  eval->add_option("--checkpoint", checkpoint_path, "Model checkpoint")->required();
  eval->add_option("--data", data_path, "JSONL labeled data")->required();
  eval->add_option("--metric", metric, "micro-f1 | macro-f1 | accuracy | pearson");
  eval->add_option("--out", out_dir, "Output directory for metric and gate CSVs");

  CLI::App* ablate = app.add_subcommand("ablate", "Run both stages under an ablation");
  ablate->add_option("--config", config_path, "Run configuration file")->required();
  ablate->add_option("--mode", ablate_mode, "no-moa | no-old | no-da")->required();

  CLI::App* grid = app.add_subcommand("grid", "Grid-search stage-2 hyperparameters");
  grid->add_option("--config", config_path, "Run configuration file")->required();
  grid->add_option("--adapter", adapter_paths, "Adapter checkpoint(s)");

  CLI11_PARSE(app, argc, argv);

  try {
    std::vector<std::filesystem::path> adapters(adapter_paths.begin(), adapter_paths.end());
    if (stage1->parsed()) {
      mixda::commands::stage1(config_path);
    } else if (stage2->parsed()) {
      mixda::commands::stage2(config_path, adapters);
    } else if (eval->parsed()) {
      mixda::commands::eval(checkpoint_path, data_path, metric, out_dir);
    } else if (ablate->parsed()) {
      mixda::commands::ablate(config_path, mixda::commands::parse_ablate_mode(ablate_mode));
    } else if (grid->parsed()) {
      mixda::commands::grid(config_path, adapters);
    }
  } catch (...) {
    return mixda::commands::handle_command_errors();
  }
  return mixda::commands::kExitOk;
}
