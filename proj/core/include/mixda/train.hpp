#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mixda/data.hpp"
#include "mixda/metrics.hpp"
#include "mixda/model.hpp"
#include "mixda/optimizer.hpp"

namespace mixda {

// Unlabeled corpus prepared for masked-LM training: either raw sequences that
// are re-masked every epoch, or pre-masked rows (cloze sentences).
struct MlmCorpus {
  std::vector<std::vector<int>> sequences;
  std::vector<MlmRow> fixed_rows;

  bool dynamic() const { return fixed_rows.empty(); }
  std::size_t size() const { return dynamic() ? sequences.size() : fixed_rows.size(); }
  bool empty() const { return size() == 0; }
};

MlmCorpus corpus_from_texts(const std::vector<std::string>& texts, const Vocab& vocab,
                            int max_len);
MlmCorpus corpus_from_triples(const std::vector<KnowledgeTriple>& triples,
                              const TemplateTable& templates, const Vocab& vocab, int max_len);

struct Stage1Config {
  double lambda = 0.5;
  double lr = 1e-4;
  int batch_size = 20;  // split between the domain and general halves
  double weight_decay = 0.05;
  int epochs = 10;
  double mix_ratio = 0.5;  // fraction of the batch drawn from the domain corpus
  int adapter_index = 0;
  std::uint64_t seed = 1;
  bool use_general_half = true;      // dropped by the no-old ablation
  bool train_task_adapters = false;  // no-da ablation: plain MLM through task adapters
};

struct LossReport {
  int step = 0;
  std::optional<double> l_k;  // knowledge loss (masked cross entropy)
  std::optional<double> l_s;  // alignment loss against the frozen FFN
  double total = 0.0;
};

struct EpochStats {
  int epoch = 0;
  std::optional<double> mean_l_k;
  std::optional<double> mean_l_s;
  double mean_total = 0.0;
};

struct Stage1Result {
  std::vector<LossReport> steps;
  std::vector<EpochStats> epochs;
};

// Mixed-batch adapter training: the domain half routes through the adapter
// under training and contributes masked cross entropy; the general half runs
// the frozen path and pulls the adapter toward the FFN outputs.
Stage1Result stage1_train(Model& model, const MlmCorpus& domain, const MlmCorpus& general,
                          const Stage1Config& cfg);

LossReport stage1_step(Model& model, AdamW& opt, const MLMBatch& domain_half,
                       const MLMBatch* general_half, const Stage1Config& cfg, double lr_scale,
                       int step, Rng* dropout_rng);

// Full-model masked-LM fitting; stands in for the upstream pretraining that
// a real deployment would inherit.
struct PretrainConfig {
  double lr = 1e-3;
  int batch_size = 16;
  int epochs = 30;
  double weight_decay = 0.01;
  std::uint64_t seed = 7;
};

void pretrain_mlm(Model& model, const MlmCorpus& corpus, const PretrainConfig& cfg);

// --- stage 2 -----------------------------------------------------------------

struct Stage2Config {
  double lr = 1e-4;
  int batch_size = 16;
  int epochs = 20;
  int warmup_epochs = 2;
  double weight_decay = 0.05;
  std::string metric = "micro-f1";  // also: macro-f1, accuracy, pearson
  std::uint64_t seed = 1;
  RoutingMode routing = RoutingMode::Gated();
};

struct Stage2Result {
  double best_val = 0.0;
  int best_epoch = -1;
  double test_metric = 0.0;
  std::vector<double> val_curve;  // one entry per epoch
};

// Few-shot task training with per-epoch validation; the best-validation
// parameters are restored before the final test evaluation.
Stage2Result stage2_train(Model& model, const FewShotSplit& split, const Stage2Config& cfg);

double stage2_step(Model& model, AdamW& opt, const TaskBatch& batch, const Stage2Config& cfg,
                   double lr_scale, Rng* dropout_rng);

// --- evaluation helpers ---------------------------------------------------------

TaskBatch make_task_batch(std::span<const LabeledExample> examples, const Vocab& vocab,
                          int max_len);

std::vector<int> predict_classes(const Model& model, std::span<const LabeledExample> examples,
                                 const RoutingMode& mode);
std::vector<double> predict_values(const Model& model, std::span<const LabeledExample> examples,
                                   const RoutingMode& mode);

double evaluate_metric(const Model& model, std::span<const LabeledExample> examples,
                       const std::string& metric, const RoutingMode& mode);

// Fraction of supervised positions whose argmax logit equals the label.
double mask_fill_accuracy(const Model& model, const MLMBatch& batch, const RoutingMode& mode);

// Mean sigmoid gate weight per (layer, expert) over real (non-pad) tokens.
struct GateStat {
  int layer = 0;
  int expert = 0;
  double mean_weight = 0.0;
};
std::vector<GateStat> gate_report(const Model& model, const std::vector<MLMBatch>& batches);
std::vector<GateStat> gate_report(const Model& model,
                                  std::span<const LabeledExample> examples);

// --- grid search ------------------------------------------------------------------

struct GridPoint {
  double lr = 0.0;
  int batch_size = 0;
  double val_metric = 0.0;
};

struct GridResult {
  GridPoint best;
  std::vector<GridPoint> all;  // in enumeration order
};

// One fresh model per (lr, batch) cell; the winner maximizes the validation
// metric with ties broken toward lower lr, then smaller batch.
GridResult grid_search(const std::function<Model()>& make_model, const FewShotSplit& split,
                       const Stage2Config& base, const std::vector<double>& lr_grid,
                       const std::vector<int>& batch_grid);

}  // namespace mixda
