#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mixda/data.hpp"
#include "mixda/model.hpp"
#include "mixda/train.hpp"

namespace mixda {

// Flat INI-style run configuration: [section] headers, key=value lines,
// '#'/';' comments. Unknown sections or keys are rejected.
struct RunConfig {
  ModelConfig model;
  int vocab_max_size = 1000;

  Stage1Config stage1;

  struct Stage2Settings {
    double lr = 1e-4;
    int batch_size = 16;
    int epochs = 20;
    int warmup_epochs = 2;
    double weight_decay = 0.05;
    TaskKind task = TaskKind::classification;
    int num_classes = 2;
    std::string metric = "micro-f1";
    int few_shot_k = 16;
    std::vector<double> lr_grid = {5e-5, 1e-4, 5e-4};
    std::vector<int> batch_grid = {2, 4, 8, 16};
  } stage2;

  struct DataPaths {
    std::filesystem::path domain_corpus;
    CorpusFormat domain_format = CorpusFormat::tsv_triples;
    std::filesystem::path general_corpus;
    CorpusFormat general_format = CorpusFormat::jsonl_text;
    std::filesystem::path task_train;
    std::filesystem::path task_validation;
    std::filesystem::path templates;  // optional extra relation templates
  } data;

  struct RunSettings {
    std::filesystem::path output_dir = "out";
    std::uint64_t seed = 1;
    std::vector<std::uint64_t> seeds;  // empty = just `seed`
  } run;

  std::vector<std::uint64_t> seed_list() const {
    return run.seeds.empty() ? std::vector<std::uint64_t>{run.seed} : run.seeds;
  }
};

// Relative data/output paths resolve against the config file's directory.
RunConfig parse_run_config(const std::filesystem::path& path);

// Applies the MIXDA_SEED environment override, when set.
void apply_seed_override(RunConfig& rc);

}  // namespace mixda
