#include "mixda/train.hpp"

#include <algorithm>
#include <cmath>

namespace mixda {

MlmCorpus corpus_from_texts(const std::vector<std::string>& texts, const Vocab& vocab,
                            int max_len) {
  MlmCorpus corpus;
  for (const std::string& t : texts) corpus.sequences.push_back(encode(t, vocab, max_len));
  return corpus;
}

MlmCorpus corpus_from_triples(const std::vector<KnowledgeTriple>& triples,
                              const TemplateTable& templates, const Vocab& vocab, int max_len) {
  MlmCorpus corpus;
  for (const KnowledgeTriple& t : triples)
    corpus.fixed_rows.push_back(cloze_to_row(triple_to_cloze(t, templates), vocab, max_len));
  return corpus;
}

namespace {

// Cycles a shuffled corpus; reshuffles whenever a full pass completes.
class BatchCursor {
 public:
  BatchCursor(const MlmCorpus& corpus, std::uint64_t seed, const std::string& tag)
      : corpus_(corpus), seed_(seed), tag_(tag) {
    order_.resize(corpus.size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
    reshuffle();
  }

  std::vector<std::size_t> take(int n) {
    std::vector<std::size_t> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
      if (pos_ == order_.size()) reshuffle();
      out.push_back(order_[pos_++]);
    }
    return out;
  }

 private:
  void reshuffle() {
    Rng rng(hash_seed(seed_, tag_, pass_++));
    rng.shuffle(order_);
    pos_ = 0;
  }

  const MlmCorpus& corpus_;
  std::uint64_t seed_;
  std::string tag_;
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
  std::uint64_t pass_ = 0;
};

MLMBatch materialize(const MlmCorpus& corpus, const std::vector<std::size_t>& indices,
                     const Vocab& vocab, std::uint64_t collate_seed) {
  if (corpus.dynamic()) {
    std::vector<std::vector<int>> seqs;
    seqs.reserve(indices.size());
    for (std::size_t i : indices) seqs.push_back(corpus.sequences[i]);
    return mlm_collate(seqs, vocab, collate_seed);
  }
  std::vector<MlmRow> rows;
  rows.reserve(indices.size());
  for (std::size_t i : indices) rows.push_back(corpus.fixed_rows[i]);
  return rows_to_batch(rows);
}

bool has_supervision(const MLMBatch& batch) {
  return std::any_of(batch.labels.v.begin(), batch.labels.v.end(),
                     [](int l) { return l != kIgnoreLabel; });
}

std::set<std::string> stage1_mask(const Model& model, const Stage1Config& cfg) {
  if (!cfg.train_task_adapters) return freeze_mask(1, model.config, cfg.adapter_index);
  std::set<std::string> mask;
  for (const auto& [name, shape] : parameter_shapes(model.config))
    if (name.find(".task_adapter.") != std::string::npos) mask.insert(name);
  if (mask.empty())
    throw ConfigError("stage 1 without domain adapters needs task adapters to train");
  return mask;
}

}  // namespace

LossReport stage1_step(Model& model, AdamW& opt, const MLMBatch& domain_half,
                       const MLMBatch* general_half, const Stage1Config& cfg, double lr_scale,
                       int step, Rng* dropout_rng) {
  ForwardOptions train_opts;
  train_opts.train = model.config.dropout > 0.0;
  train_opts.rng = dropout_rng;

  LossReport report;
  report.step = step;

  const RoutingMode knowledge_route = cfg.train_task_adapters
                                          ? RoutingMode::Vanilla()
                                          : RoutingMode::AdapterOnly(cfg.adapter_index);

  Tensor knowledge_loss;
  if (has_supervision(domain_half)) {
    EncoderOutput out = encoder_forward(batch_view(domain_half), model.params, model.config,
                                        knowledge_route, train_opts);
    Tensor logits = lm_head_forward(out.hidden, model.params, model.config);
    auto ce = masked_cross_entropy(logits, domain_half.labels.v);
    knowledge_loss = ce.loss;
    report.l_k = ce.loss.item();
  }

  Tensor general_loss;  // L_S normally; plain cross entropy in the no-da mode
  bool general_is_alignment = false;
  if (general_half != nullptr) {
    ForwardOptions general_opts = train_opts;
    general_opts.capture = !cfg.train_task_adapters;
    EncoderOutput out = encoder_forward(batch_view(*general_half), model.params, model.config,
                                        RoutingMode::Vanilla(), general_opts);
    if (cfg.train_task_adapters) {
      if (has_supervision(*general_half)) {
        Tensor logits = lm_head_forward(out.hidden, model.params, model.config);
        general_loss = masked_cross_entropy(logits, general_half->labels.v).loss;
      }
    } else {
      general_is_alignment = true;
      std::vector<AlignmentPair> pairs;
      for (const LayerCapture& cap : out.captures)
        pairs.push_back({cap.ffn_output, cap.adapter_outputs.at(cfg.adapter_index)});
      if (pairs.empty())
        throw ConfigError("stage 1: no adapter layers captured for the alignment loss");
      general_loss = l2_alignment(pairs);
      report.l_s = general_loss.item();
    }
  }

  Tensor total;
  if (knowledge_loss.defined()) total = scale(knowledge_loss, cfg.lambda);
  if (general_loss.defined()) total = total.defined() ? add(total, general_loss) : general_loss;
  if (!total.defined()) {
    report.total = 0.0;  // nothing to learn from this pairing; skip the update
    return report;
  }
  report.total = total.item();

  backward(total);
  opt.step(model.params, lr_scale);
  return report;
}

Stage1Result stage1_train(Model& model, const MlmCorpus& domain, const MlmCorpus& general,
                          const Stage1Config& cfg) {
  if (domain.empty()) throw DataError("stage 1: empty domain corpus");
  if (cfg.use_general_half && general.empty())
    throw DataError("stage 1: empty general corpus");
  if (cfg.mix_ratio <= 0.0 || cfg.mix_ratio >= 1.0)
    throw ConfigError("stage 1: mix_ratio must lie strictly between 0 and 1");
  if (cfg.lambda < 0.0) throw ConfigError("stage 1: lambda must be non-negative");

  model.params.set_trainable(stage1_mask(model, cfg));

  const int domain_per_step =
      std::max(1, static_cast<int>(std::lround(cfg.batch_size * cfg.mix_ratio)));
  const int general_per_step = std::max(1, cfg.batch_size - domain_per_step);

  const int steps_domain =
      static_cast<int>((domain.size() + domain_per_step - 1) / domain_per_step);
  const int steps_general =
      cfg.use_general_half
          ? static_cast<int>((general.size() + general_per_step - 1) / general_per_step)
          : 0;
  const int steps_per_epoch = std::max({steps_domain, steps_general, 1});

  ScheduleConfig sched{0, cfg.epochs * steps_per_epoch};
  AdamW opt({cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay});
  Rng dropout_rng(hash_seed(cfg.seed, "stage1.dropout"));

  BatchCursor domain_cursor(domain, cfg.seed, "stage1.domain");
  BatchCursor general_cursor(general, cfg.seed, "stage1.general");

  Stage1Result result;
  int step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double sum_k = 0.0, sum_s = 0.0, sum_total = 0.0;
    int n_k = 0, n_s = 0;
    for (int s = 0; s < steps_per_epoch; ++s, ++step) {
      MLMBatch domain_half =
          materialize(domain, domain_cursor.take(domain_per_step), model.vocab,
                      hash_seed(cfg.seed, "stage1.collate.domain", step));
      MLMBatch general_half;
      if (cfg.use_general_half)
        general_half = materialize(general, general_cursor.take(general_per_step), model.vocab,
                                   hash_seed(cfg.seed, "stage1.collate.general", step));
      LossReport report =
          stage1_step(model, opt, domain_half, cfg.use_general_half ? &general_half : nullptr,
                      cfg, lr_at(step, sched), step, &dropout_rng);
      if (report.l_k) {
        sum_k += *report.l_k;
        ++n_k;
      }
      if (report.l_s) {
        sum_s += *report.l_s;
        ++n_s;
      }
      sum_total += report.total;
      result.steps.push_back(std::move(report));
    }
    EpochStats stats;
    stats.epoch = epoch;
    if (n_k > 0) stats.mean_l_k = sum_k / n_k;
    if (n_s > 0) stats.mean_l_s = sum_s / n_s;
    stats.mean_total = sum_total / steps_per_epoch;
    result.epochs.push_back(stats);
  }
  return result;
}

void pretrain_mlm(Model& model, const MlmCorpus& corpus, const PretrainConfig& cfg) {
  if (corpus.empty()) throw DataError("pretrain: empty corpus");
  std::set<std::string> all;
  for (const auto& [name, t] : model.params.items()) all.insert(name);
  model.params.set_trainable(all);

  const int steps_per_epoch =
      static_cast<int>((corpus.size() + cfg.batch_size - 1) / cfg.batch_size);
  ScheduleConfig sched{0, cfg.epochs * steps_per_epoch};
  AdamW opt({cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay});
  Rng dropout_rng(hash_seed(cfg.seed, "pretrain.dropout"));
  BatchCursor cursor(corpus, cfg.seed, "pretrain");

  ForwardOptions opts;
  opts.train = model.config.dropout > 0.0;
  opts.rng = &dropout_rng;

  int step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (int s = 0; s < steps_per_epoch; ++s, ++step) {
      MLMBatch batch = materialize(corpus, cursor.take(cfg.batch_size), model.vocab,
                                   hash_seed(cfg.seed, "pretrain.collate", step));
      if (!has_supervision(batch)) continue;
      EncoderOutput out = encoder_forward(batch_view(batch), model.params, model.config,
                                          RoutingMode::Vanilla(), opts);
      Tensor logits = lm_head_forward(out.hidden, model.params, model.config);
      Tensor loss = masked_cross_entropy(logits, batch.labels.v).loss;
      backward(loss);
      opt.step(model.params, lr_at(step, sched));
    }
  }
}

// --- stage 2 ---------------------------------------------------------------------

TaskBatch make_task_batch(std::span<const LabeledExample> examples, const Vocab& vocab,
                          int max_len) {
  TaskBatch batch;
  std::vector<std::vector<int>> rows;
  int width = 1;
  for (const LabeledExample& ex : examples) {
    rows.push_back(ex.text2.empty() ? encode(ex.text, vocab, max_len)
                                    : encode_pair(ex.text, ex.text2, vocab, max_len));
    width = std::max(width, static_cast<int>(rows.back().size()));
    batch.labels.push_back(static_cast<int>(ex.label));
    batch.targets.push_back(ex.label);
  }
  const int B = static_cast<int>(rows.size());
  batch.input_ids = IntGrid(B, width, Vocab::kPad);
  batch.attention_mask = IntGrid(B, width, 0);
  for (int b = 0; b < B; ++b)
    for (int t = 0; t < static_cast<int>(rows[b].size()); ++t) {
      batch.input_ids.at(b, t) = rows[b][t];
      batch.attention_mask.at(b, t) = 1;
    }
  return batch;
}

double stage2_step(Model& model, AdamW& opt, const TaskBatch& batch, const Stage2Config& cfg,
                   double lr_scale, Rng* dropout_rng) {
  ForwardOptions opts;
  opts.train = model.config.dropout > 0.0;
  opts.rng = dropout_rng;
  EncoderOutput out =
      encoder_forward(batch_view(batch), model.params, model.config, cfg.routing, opts);
  Tensor scores = task_head_forward(out.hidden, out.batch, out.seq_len, model.params, model.config);

  Tensor loss;
  if (model.config.task_kind == TaskKind::classification) {
    for (int label : batch.labels)
      if (label < 0 || label >= model.config.num_classes)
        throw DataError("stage 2: label " + std::to_string(label) + " outside [0, " +
                        std::to_string(model.config.num_classes) + ")");
    loss = masked_cross_entropy(scores, batch.labels).loss;
  } else {
    loss = mean_squared_error(scores, batch.targets);
  }
  const double value = loss.item();
  backward(loss);
  opt.step(model.params, lr_scale);
  return value;
}

namespace {

std::vector<double> snapshot_values(const ParameterStore& store,
                                    const std::set<std::string>& names) {
  std::vector<double> out;
  for (const std::string& name : names) {
    auto d = store.at(name).data();
    out.insert(out.end(), d.begin(), d.end());
  }
  return out;
}

void restore_values(ParameterStore& store, const std::set<std::string>& names,
                    const std::vector<double>& flat) {
  std::size_t pos = 0;
  for (const std::string& name : names) {
    Tensor t = store.ref(name);
    std::copy(flat.begin() + pos, flat.begin() + pos + t.data().size(), t.data().begin());
    pos += t.data().size();
  }
}

}  // namespace

Stage2Result stage2_train(Model& model, const FewShotSplit& split, const Stage2Config& cfg) {
  if (split.train.empty() || split.validation.empty())
    throw DataError("stage 2: empty few-shot split");
  if (cfg.epochs < 1 || cfg.batch_size < 1)
    throw ConfigError("stage 2: epochs and batch_size must be positive");
  const std::set<std::string> mask = freeze_mask(2, model.config);
  model.params.set_trainable(mask);

  const int steps_per_epoch =
      static_cast<int>((split.train.size() + cfg.batch_size - 1) / cfg.batch_size);
  ScheduleConfig sched{cfg.warmup_epochs * steps_per_epoch, cfg.epochs * steps_per_epoch};
  AdamW opt({cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay});
  Rng dropout_rng(hash_seed(cfg.seed, "stage2.dropout"));

  Stage2Result result;
  std::vector<double> best_snapshot;
  std::vector<LabeledExample> train = split.train;

  int step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng(hash_seed(cfg.seed, "stage2.shuffle", epoch));
    shuffle_rng.shuffle(train);
    for (std::size_t off = 0; off < train.size(); off += cfg.batch_size, ++step) {
      const std::size_t end = std::min(train.size(), off + cfg.batch_size);
      TaskBatch batch = make_task_batch({train.data() + off, end - off}, model.vocab,
                                        model.config.max_seq_len);
      stage2_step(model, opt, batch, cfg, lr_at(step, sched), &dropout_rng);
    }
    const double val = evaluate_metric(model, split.validation, cfg.metric, cfg.routing);
    result.val_curve.push_back(val);
    if (result.best_epoch < 0 || val > result.best_val) {
      result.best_val = val;
      result.best_epoch = epoch;
      best_snapshot = snapshot_values(model.params, mask);
    }
  }
  restore_values(model.params, mask, best_snapshot);
  result.test_metric = evaluate_metric(model, split.test, cfg.metric, cfg.routing);
  return result;
}

// --- evaluation ------------------------------------------------------------------

namespace {
constexpr int kEvalBatch = 32;
}

std::vector<int> predict_classes(const Model& model, std::span<const LabeledExample> examples,
                                 const RoutingMode& mode) {
  if (model.config.task_kind != TaskKind::classification)
    throw ConfigError("predict_classes: model has no classification head");
  std::vector<int> preds;
  for (std::size_t off = 0; off < examples.size(); off += kEvalBatch) {
    const std::size_t end = std::min(examples.size(), off + kEvalBatch);
    TaskBatch batch = make_task_batch(examples.subspan(off, end - off), model.vocab,
                                      model.config.max_seq_len);
    EncoderOutput out = encoder_forward(batch_view(batch), model.params, model.config, mode, {});
    Tensor scores =
        task_head_forward(out.hidden, out.batch, out.seq_len, model.params, model.config);
    const int C = scores.cols();
    for (int b = 0; b < scores.rows(); ++b) {
      auto row = scores.data().subspan(static_cast<std::size_t>(b) * C, C);
      preds.push_back(static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin()));
    }
  }
  return preds;
}

std::vector<double> predict_values(const Model& model, std::span<const LabeledExample> examples,
                                   const RoutingMode& mode) {
  if (model.config.task_kind != TaskKind::regression)
    throw ConfigError("predict_values: model has no regression head");
  std::vector<double> preds;
  for (std::size_t off = 0; off < examples.size(); off += kEvalBatch) {
    const std::size_t end = std::min(examples.size(), off + kEvalBatch);
    TaskBatch batch = make_task_batch(examples.subspan(off, end - off), model.vocab,
                                      model.config.max_seq_len);
    EncoderOutput out = encoder_forward(batch_view(batch), model.params, model.config, mode, {});
    Tensor scores =
        task_head_forward(out.hidden, out.batch, out.seq_len, model.params, model.config);
    for (double v : scores.data()) preds.push_back(v);
  }
  return preds;
}

double evaluate_metric(const Model& model, std::span<const LabeledExample> examples,
                       const std::string& metric, const RoutingMode& mode) {
  if (examples.empty()) throw DataError("evaluate_metric: no examples");
  if (metric == "pearson") {
    if (model.config.task_kind != TaskKind::regression)
      throw ConfigError("metric 'pearson' needs a regression task");
    std::vector<double> preds = predict_values(model, examples, mode);
    std::vector<double> golds;
    for (const auto& ex : examples) golds.push_back(ex.label);
    return pearson(preds, golds);
  }
  if (model.config.task_kind != TaskKind::classification)
    throw ConfigError("metric '" + metric + "' needs a classification task");
  std::vector<int> preds = predict_classes(model, examples, mode);
  std::vector<int> golds;
  for (const auto& ex : examples) golds.push_back(static_cast<int>(ex.label));
  if (metric == "micro-f1") return micro_f1(preds, golds);
  if (metric == "macro-f1") return macro_f1(preds, golds);
  if (metric == "accuracy") return accuracy(preds, golds);
  throw ConfigError("unknown metric '" + metric + "'");
}

double mask_fill_accuracy(const Model& model, const MLMBatch& batch, const RoutingMode& mode) {
  EncoderOutput out = encoder_forward(batch_view(batch), model.params, model.config, mode, {});
  Tensor logits = lm_head_forward(out.hidden, model.params, model.config);
  const int V = logits.cols();
  std::int64_t total = 0, correct = 0;
  for (std::size_t i = 0; i < batch.labels.v.size(); ++i) {
    const int label = batch.labels.v[i];
    if (label == kIgnoreLabel) continue;
    ++total;
    auto row = logits.data().subspan(i * static_cast<std::size_t>(V), V);
    const int arg = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    if (arg == label) ++correct;
  }
  if (total == 0) throw DataError("mask_fill_accuracy: batch has no supervised positions");
  return static_cast<double>(correct) / static_cast<double>(total);
}

std::vector<GateStat> gate_report(const Model& model, const std::vector<MLMBatch>& batches) {
  const int E = model.config.num_experts();
  std::map<int, std::vector<double>> sums;   // layer -> per-expert sum
  std::map<int, std::int64_t> counts;        // layer -> token count
  for (const MLMBatch& batch : batches) {
    EncoderOutput out = encoder_forward(batch_view(batch), model.params, model.config,
                                        RoutingMode::Gated(), {});
    for (const GateTrace& trace : out.gate_traces) {
      auto& acc = sums[trace.layer];
      acc.resize(E, 0.0);
      auto w = trace.weights.data();
      for (int b = 0; b < out.batch; ++b)
        for (int t = 0; t < out.seq_len; ++t) {
          const std::size_t row = static_cast<std::size_t>(b) * out.seq_len + t;
          if (batch.attention_mask.v[row] == 0) continue;
          for (int e = 0; e < E; ++e) acc[e] += w[row * E + e];
          ++counts[trace.layer];
        }
    }
  }
  std::vector<GateStat> stats;
  for (const auto& [layer, acc] : sums) {
    const double n = static_cast<double>(std::max<std::int64_t>(1, counts[layer]));
    for (int e = 0; e < E; ++e) stats.push_back({layer, e, acc[e] / n});
  }
  return stats;
}

std::vector<GateStat> gate_report(const Model& model,
                                  std::span<const LabeledExample> examples) {
  std::vector<MLMBatch> batches;
  for (std::size_t off = 0; off < examples.size(); off += kEvalBatch) {
    const std::size_t end = std::min(examples.size(), off + kEvalBatch);
    TaskBatch tb = make_task_batch(examples.subspan(off, end - off), model.vocab,
                                   model.config.max_seq_len);
    MLMBatch mb;
    mb.input_ids = tb.input_ids;
    mb.attention_mask = tb.attention_mask;
    mb.labels = IntGrid(tb.input_ids.rows, tb.input_ids.cols, kIgnoreLabel);
    batches.push_back(std::move(mb));
  }
  return gate_report(model, batches);
}

// --- grid search -------------------------------------------------------------------

GridResult grid_search(const std::function<Model()>& make_model, const FewShotSplit& split,
                       const Stage2Config& base, const std::vector<double>& lr_grid,
                       const std::vector<int>& batch_grid) {
  if (lr_grid.empty() || batch_grid.empty()) throw ConfigError("grid_search: empty grid");
  GridResult result;
  bool have_best = false;
  for (double lr : lr_grid)
    for (int batch_size : batch_grid) {
      Model model = make_model();
      Stage2Config cfg = base;
      cfg.lr = lr;
      cfg.batch_size = batch_size;
      Stage2Result run = stage2_train(model, split, cfg);
      GridPoint point{lr, batch_size, run.best_val};
      result.all.push_back(point);
      const bool better =
          !have_best || point.val_metric > result.best.val_metric ||
          (point.val_metric == result.best.val_metric &&
           (point.lr < result.best.lr ||
            (point.lr == result.best.lr && point.batch_size < result.best.batch_size)));
      if (better) {
        result.best = point;
        have_best = true;
      }
    }
  return result;
}

}  // namespace mixda
