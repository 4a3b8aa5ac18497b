#include "mixda/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace mixda::commands {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

void require_file(const fs::path& path, const char* what) {
  if (path.empty()) throw ConfigError(std::string("config: data.") + what + " is required");
  if (!fs::exists(path))
    throw DataError(std::string("missing ") + what + ": " + path.string());
}

TemplateTable load_templates(const RunConfig& rc) {
  TemplateTable templates = TemplateTable::builtin();
  if (!rc.data.templates.empty()) {
    require_file(rc.data.templates, "templates");
    templates.load_file(rc.data.templates);
  }
  return templates;
}

// Text with cloze answers substituted back, for vocabulary building.
std::string instantiated_text(const ClozeResult& cloze) {
  std::vector<std::string> tokens = cloze.tokens;
  for (std::size_t i = 0; i < cloze.masked_positions.size(); ++i)
    tokens[cloze.masked_positions[i]] = cloze.answers[i];
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

struct LoadedCorpus {
  MlmCorpus corpus;
  std::vector<std::string> vocab_texts;
};

LoadedCorpus load_mlm_corpus(const fs::path& path, CorpusFormat format,
                             const TemplateTable& templates, const Vocab* vocab, int max_len) {
  Corpus raw = load_corpus(path, format);
  LoadedCorpus out;
  if (format == CorpusFormat::tsv_triples) {
    for (const KnowledgeTriple& t : raw.triples)
      out.vocab_texts.push_back(instantiated_text(triple_to_cloze(t, templates)));
    if (vocab) out.corpus = corpus_from_triples(raw.triples, templates, *vocab, max_len);
  } else if (format == CorpusFormat::jsonl_text) {
    out.vocab_texts = raw.texts;
    if (vocab) out.corpus = corpus_from_texts(raw.texts, *vocab, max_len);
  } else {
    throw ConfigError("corpus format '" + corpus_format_name(format) +
                      "' is not valid for stage-1 training data");
  }
  return out;
}

std::string loss_csv_text(const Stage1Result& result) {
  std::ostringstream os;
  os << "step,L_K,L_S,L\n";
  for (const LossReport& r : result.steps) {
    os << r.step << ",";
    if (r.l_k) os << fmt(*r.l_k);
    os << ",";
    if (r.l_s) os << fmt(*r.l_s);
    os << "," << fmt(r.total) << "\n";
  }
  return os.str();
}

struct Stage1Options {
  bool use_general_half = true;
  bool train_task_adapters = false;  // no-da: MLM through task adapters
};

Stage1Artifacts run_stage1(const RunConfig& rc, const Stage1Options& opts) {
  TemplateTable templates = load_templates(rc);
  require_file(rc.data.domain_corpus, "domain_corpus");
  LoadedCorpus domain = load_mlm_corpus(rc.data.domain_corpus, rc.data.domain_format, templates,
                                        nullptr, rc.model.max_seq_len);
  LoadedCorpus general;
  std::vector<std::string> vocab_texts = domain.vocab_texts;
  const bool need_general = opts.use_general_half || opts.train_task_adapters;
  if (need_general) {
    require_file(rc.data.general_corpus, "general_corpus");
    general = load_mlm_corpus(rc.data.general_corpus, rc.data.general_format, templates, nullptr,
                              rc.model.max_seq_len);
    vocab_texts.insert(vocab_texts.end(), general.vocab_texts.begin(),
                       general.vocab_texts.end());
  }
  Vocab vocab = Vocab::build(vocab_texts, rc.vocab_max_size);

  ModelConfig cfg = rc.model;
  cfg.use_moa_gate = false;
  cfg.task_kind = TaskKind::none;
  cfg.num_classes = 0;
  if (opts.train_task_adapters) {
    cfg.num_domain_adapters = 0;
    if (cfg.task_adapter_style == TaskAdapterStyle::none)
      cfg.task_adapter_style = TaskAdapterStyle::pfeiffer;
  } else {
    cfg.task_adapter_style = TaskAdapterStyle::none;
    if (cfg.num_domain_adapters < 1) cfg.num_domain_adapters = 1;
    if (rc.stage1.adapter_index >= cfg.num_domain_adapters)
      throw ConfigError("config: stage1.adapter_index outside the configured adapter count");
  }

  Model model = build_model(cfg, vocab, rc.run.seed);
  // Re-resolve the corpora against the final vocabulary.
  domain = load_mlm_corpus(rc.data.domain_corpus, rc.data.domain_format, templates, &model.vocab,
                           cfg.max_seq_len);
  if (need_general)
    general = load_mlm_corpus(rc.data.general_corpus, rc.data.general_format, templates,
                              &model.vocab, cfg.max_seq_len);

  Stage1Config s1 = rc.stage1;
  s1.use_general_half = opts.use_general_half;
  s1.train_task_adapters = opts.train_task_adapters;
  Stage1Result result = stage1_train(model, domain.corpus, general.corpus, s1);

  fs::create_directories(rc.run.output_dir);
  Stage1Artifacts artifacts;
  artifacts.loss_csv = rc.run.output_dir / "stage1_loss.csv";
  write_text(artifacts.loss_csv, loss_csv_text(result));

  const std::string tensor_tag =
      opts.train_task_adapters
          ? ".task_adapter."
          : ".domain_adapter." + std::to_string(rc.stage1.adapter_index) + ".";
  artifacts.checkpoint = rc.run.output_dir / "adapter.ckpt";
  checkpoint::save(artifacts.checkpoint, model.config, model.vocab,
                   checkpoint::select_by_prefix(model.params, tensor_tag));

  for (const EpochStats& e : result.epochs) {
    std::cout << "stage1 epoch " << e.epoch;
    if (e.mean_l_k) std::cout << " L_K=" << fmt(*e.mean_l_k);
    if (e.mean_l_s) std::cout << " L_S=" << fmt(*e.mean_l_s);
    std::cout << " L=" << fmt(e.mean_total) << "\n";
  }
  return artifacts;
}

// --- stage-2 plumbing -------------------------------------------------------

struct AdapterLoad {
  ModelConfig base_config;
  Vocab vocab;
  // Tensors keyed by their names in the *stage-2* model (slot-remapped).
  std::map<std::string, Tensor> tensors;
  std::set<std::string> loaded_names;
};

std::string remap_adapter_name(const std::string& name, int slot) {
  const std::string tag = ".domain_adapter.";
  const auto at = name.find(tag);
  if (at == std::string::npos) return name;
  const auto idx_begin = at + tag.size();
  const auto idx_end = name.find('.', idx_begin);
  return name.substr(0, idx_begin) + std::to_string(slot) + name.substr(idx_end);
}

void require_base_compatible(const ModelConfig& a, const ModelConfig& b, const Vocab& va,
                             const Vocab& vb, const fs::path& path) {
  auto fail = [&path](const std::string& what) {
    throw ConfigError("adapter checkpoint " + path.string() +
                      " is incompatible with the base model: " + what);
  };
  if (a.vocab_size != b.vocab_size || !(va == vb)) fail("vocabulary differs");
  if (a.hidden_dim != b.hidden_dim) fail("hidden_dim differs");
  if (a.ffn_dim != b.ffn_dim) fail("ffn_dim differs");
  if (a.num_layers != b.num_layers) fail("num_layers differs");
  if (a.num_heads != b.num_heads) fail("num_heads differs");
  if (a.max_seq_len != b.max_seq_len) fail("max_seq_len differs");
  if (a.adapter_layers != b.adapter_layers) fail("adapter_layers differ");
  if (a.adapter_reduction != b.adapter_reduction) fail("adapter_reduction differs");
  if (a.adapter_attachment != b.adapter_attachment) fail("adapter_attachment differs");
  if (a.tie_lm_head != b.tie_lm_head) fail("tie_lm_head differs");
  if (a.init_seed != b.init_seed) fail("base init seed differs");
}

AdapterLoad load_adapters(const std::vector<fs::path>& adapters) {
  AdapterLoad out;
  std::vector<fs::path> seen;
  for (std::size_t i = 0; i < adapters.size(); ++i) {
    const fs::path canonical = fs::weakly_canonical(adapters[i]);
    if (std::find(seen.begin(), seen.end(), canonical) != seen.end())
      throw ConfigError("duplicate adapter checkpoint: " + adapters[i].string());
    seen.push_back(canonical);
    checkpoint::Contents contents = checkpoint::load(adapters[i]);
    if (i == 0) {
      out.base_config = contents.config;
      out.vocab = contents.vocab;
    } else {
      require_base_compatible(contents.config, out.base_config, contents.vocab, out.vocab,
                              adapters[i]);
    }
    for (const auto& [name, tensor] : contents.tensors) {
      const std::string remapped = remap_adapter_name(name, static_cast<int>(i));
      if (!out.tensors.emplace(remapped, tensor).second)
        throw ConfigError("adapter checkpoint " + adapters[i].string() +
                          " collides on parameter '" + remapped + "'");
      out.loaded_names.insert(remapped);
    }
  }
  return out;
}

FewShotSplit make_split(const LabeledDataset& dataset, TaskKind task, int k,
                        std::uint64_t seed) {
  if (task == TaskKind::classification) return few_shot_sample(dataset, k, seed);
  // Regression: one pooled pseudo-class.
  if (static_cast<int>(dataset.train.size()) < 2 * k)
    throw DataError("few-shot: training pool has fewer than 2K examples");
  std::vector<std::size_t> order(dataset.train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(hash_seed(seed, "few_shot.regression"));
  rng.shuffle(order);
  FewShotSplit split;
  split.k = k;
  split.seed = seed;
  split.test = dataset.validation;
  for (int i = 0; i < k; ++i) split.train.push_back(dataset.train[order[i]]);
  for (int i = k; i < 2 * k; ++i) split.validation.push_back(dataset.train[order[i]]);
  return split;
}

LabeledDataset load_task_data(const RunConfig& rc) {
  require_file(rc.data.task_train, "task_train");
  require_file(rc.data.task_validation, "task_validation");
  LabeledDataset dataset;
  dataset.train = load_corpus(rc.data.task_train, CorpusFormat::jsonl_labeled).examples;
  dataset.validation = load_corpus(rc.data.task_validation, CorpusFormat::jsonl_labeled).examples;
  dataset.num_classes = rc.stage2.num_classes;
  if (rc.stage2.task == TaskKind::classification) {
    for (const auto& ex : dataset.train)
      if (ex.label < 0 || ex.label >= dataset.num_classes)
        throw DataError("task label " + std::to_string(ex.label) + " outside [0, " +
                        std::to_string(dataset.num_classes) + ")");
  }
  return dataset;
}

struct Stage2Options {
  bool use_gate = true;
  std::optional<RoutingMode> routing;        // default: gated / adapter-only / vanilla
  bool continue_task_adapters = false;       // no-da: keep stage-1 task adapters
  std::string subdir = "";                   // extra directory level under output_dir
};

Stage2Artifacts run_stage2(const RunConfig& rc, const std::vector<fs::path>& adapters,
                           const Stage2Options& opts) {
  LabeledDataset dataset = load_task_data(rc);

  AdapterLoad loaded;
  const int n_adapters = static_cast<int>(adapters.size());
  std::uint64_t base_seed = rc.run.seed;
  ModelConfig cfg;
  Vocab vocab;
  if (n_adapters > 0) {
    loaded = load_adapters(adapters);
    cfg = loaded.base_config;
    vocab = loaded.vocab;
    base_seed = cfg.init_seed;
  } else {
    std::vector<std::string> texts;
    for (const auto& ex : dataset.train) {
      texts.push_back(ex.text);
      if (!ex.text2.empty()) texts.push_back(ex.text2);
    }
    for (const auto& ex : dataset.validation) {
      texts.push_back(ex.text);
      if (!ex.text2.empty()) texts.push_back(ex.text2);
    }
    vocab = Vocab::build(texts, rc.vocab_max_size);
    cfg = rc.model;
    cfg.vocab_size = vocab.size();
  }

  // Checkpoints from the no-da ablation carry task adapters, not domain
  // adapters; they continue training rather than defining expert slots.
  const int n_domain = opts.continue_task_adapters ? 0 : n_adapters;
  cfg.num_domain_adapters = n_domain;
  cfg.use_moa_gate = opts.use_gate && n_domain > 0;
  if (opts.continue_task_adapters && n_adapters > 0) {
    cfg.task_adapter_style = loaded.base_config.task_adapter_style;
    cfg.task_adapter_reduction = loaded.base_config.task_adapter_reduction;
  } else {
    cfg.task_adapter_style = rc.model.task_adapter_style;
    cfg.task_adapter_reduction = rc.model.task_adapter_reduction;
  }
  cfg.gate_style = rc.model.gate_style;
  cfg.gate_hidden_dim = rc.model.gate_hidden_dim;
  cfg.gate_input = rc.model.gate_input;
  cfg.dropout = rc.model.dropout;
  cfg.task_kind = rc.stage2.task;
  cfg.num_classes = rc.stage2.task == TaskKind::classification ? rc.stage2.num_classes : 0;
  cfg.init_seed = base_seed;
  validate(cfg);

  RoutingMode routing = RoutingMode::Vanilla();
  if (opts.routing) {
    routing = *opts.routing;
  } else if (cfg.use_moa_gate) {
    routing = RoutingMode::Gated();
  } else if (n_domain > 0) {
    routing = RoutingMode::AdapterOnly(0);
  }

  fs::path out_root = rc.run.output_dir;
  if (!opts.subdir.empty()) out_root /= opts.subdir;
  fs::create_directories(out_root);

  Stage2Artifacts artifacts;
  std::vector<double> metrics;
  for (std::uint64_t seed : rc.seed_list()) {
    ParameterStore params = build_parameters(cfg, base_seed);
    Model model{cfg, vocab, std::move(params)};
    if (!loaded.tensors.empty()) model.params.load_values(loaded.tensors);

    std::set<std::string> fresh = freeze_mask(2, cfg);
    if (opts.continue_task_adapters)
      for (const std::string& name : loaded.loaded_names) fresh.erase(name);
    reinit_parameters(model.params, cfg, fresh, seed);

    FewShotSplit split = make_split(dataset, rc.stage2.task, rc.stage2.few_shot_k, seed);

    Stage2Config s2;
    s2.lr = rc.stage2.lr;
    s2.batch_size = rc.stage2.batch_size;
    s2.epochs = rc.stage2.epochs;
    s2.warmup_epochs = rc.stage2.warmup_epochs;
    s2.weight_decay = rc.stage2.weight_decay;
    s2.metric = rc.stage2.metric;
    s2.seed = seed;
    s2.routing = routing;
    Stage2Result result = stage2_train(model, split, s2);

    const fs::path seed_dir = out_root / ("seed_" + std::to_string(seed));
    fs::create_directories(seed_dir);
    SeedRun run;
    run.seed = seed;
    run.test_metric = result.test_metric;
    run.best_epoch = result.best_epoch;
    run.best_val = result.best_val;
    run.checkpoint = seed_dir / "task.ckpt";
    checkpoint::save(run.checkpoint, model.config, model.vocab,
                     checkpoint::select_all(model.params));

    std::ostringstream curve;
    curve << "epoch,val_" << s2.metric << "\n";
    for (std::size_t e = 0; e < result.val_curve.size(); ++e)
      curve << e << "," << fmt(result.val_curve[e]) << "\n";
    write_text(seed_dir / "val_curve.csv", curve.str());

    std::cout << "stage2 seed " << seed << " best_epoch=" << result.best_epoch
              << " val=" << fmt(result.best_val) << " test=" << fmt(result.test_metric) << "\n";
    metrics.push_back(result.test_metric);
    artifacts.runs.push_back(std::move(run));
  }

  artifacts.aggregate = aggregate_seeds(metrics);
  std::ostringstream agg;
  agg << "seed,test_" << rc.stage2.metric << "\n";
  for (const SeedRun& run : artifacts.runs)
    agg << run.seed << "," << fmt(run.test_metric) << "\n";
  artifacts.aggregate_csv = out_root / "aggregate.csv";
  write_text(artifacts.aggregate_csv, agg.str());

  std::ostringstream report;
  report << "metric " << rc.stage2.metric << "\n";
  report << "seeds " << artifacts.runs.size() << "\n";
  report << "result " << format_mean_std_percent(artifacts.aggregate) << "\n";
  artifacts.report_txt = out_root / "report.txt";
  write_text(artifacts.report_txt, report.str());
  std::cout << "stage2 " << rc.stage2.metric << " = "
            << format_mean_std_percent(artifacts.aggregate) << "\n";
  return artifacts;
}

}  // namespace

Stage1Artifacts stage1(const fs::path& config_path) {
  RunConfig rc = parse_run_config(config_path);
  apply_seed_override(rc);
  return run_stage1(rc, Stage1Options{});
}

Stage2Artifacts stage2(const fs::path& config_path, const std::vector<fs::path>& adapters) {
  RunConfig rc = parse_run_config(config_path);
  apply_seed_override(rc);
  return run_stage2(rc, adapters, Stage2Options{});
}

EvalArtifacts eval(const fs::path& checkpoint_path, const fs::path& data_path,
                   const std::string& metric, const fs::path& out_dir) {
  checkpoint::Contents contents = checkpoint::load(checkpoint_path);
  const ModelConfig& cfg = contents.config;
  if (cfg.task_kind == TaskKind::none)
    throw ConfigError("checkpoint " + checkpoint_path.string() + " has no task head to evaluate");

  ParameterStore params = build_parameters(cfg, cfg.init_seed);
  params.load_values(contents.tensors);
  Model model{cfg, contents.vocab, std::move(params)};

  if (!fs::exists(data_path)) throw DataError("missing data file: " + data_path.string());
  std::vector<LabeledExample> examples =
      load_corpus(data_path, CorpusFormat::jsonl_labeled).examples;
  if (examples.empty()) throw DataError("data file has no examples: " + data_path.string());

  RoutingMode routing = RoutingMode::Vanilla();
  if (cfg.use_moa_gate && cfg.num_domain_adapters > 0)
    routing = RoutingMode::Gated();
  else if (cfg.num_domain_adapters > 0)
    routing = RoutingMode::AdapterOnly(0);

  EvalArtifacts artifacts;
  artifacts.examples = examples.size();
  artifacts.report.name = metric;
  artifacts.report.value = evaluate_metric(model, examples, metric, routing);
  if (cfg.task_kind == TaskKind::classification) {
    std::vector<int> golds;
    for (const auto& ex : examples) golds.push_back(static_cast<int>(ex.label));
    artifacts.report.support = class_support(golds);
  }

  fs::create_directories(out_dir);
  std::ostringstream csv;
  csv << "metric,value\n" << metric << "," << fmt(artifacts.report.value) << "\n";
  for (const auto& [cls, count] : artifacts.report.support)
    csv << "support." << cls << "," << count << "\n";
  artifacts.metrics_csv = out_dir / "metrics.csv";
  write_text(artifacts.metrics_csv, csv.str());

  if (routing.kind == RoutingMode::Kind::gated) {
    std::vector<GateStat> stats = gate_report(model, examples);
    std::ostringstream gate_csv;
    gate_csv << "layer,expert,mean_weight\n";
    for (const GateStat& s : stats)
      gate_csv << s.layer << "," << s.expert << "," << fmt(s.mean_weight) << "\n";
    artifacts.gate_csv = out_dir / "gate_report.csv";
    write_text(artifacts.gate_csv, gate_csv.str());
  }

  std::cout << "eval " << metric << " = " << fmt(artifacts.report.value) << " on "
            << examples.size() << " examples\n";
  return artifacts;
}

AblateMode parse_ablate_mode(const std::string& name) {
  if (name == "no-moa") return AblateMode::no_moa;
  if (name == "no-old") return AblateMode::no_old;
  if (name == "no-da") return AblateMode::no_da;
  throw ConfigError("unknown ablation mode '" + name + "' (expected no-moa, no-old, no-da)");
}

std::string ablate_mode_name(AblateMode mode) {
  switch (mode) {
    case AblateMode::no_moa: return "no-moa";
    case AblateMode::no_old: return "no-old";
    case AblateMode::no_da: return "no-da";
  }
  return "?";
}

Stage2Artifacts ablate(const fs::path& config_path, AblateMode mode) {
  RunConfig rc = parse_run_config(config_path);
  apply_seed_override(rc);
  rc.run.output_dir /= ablate_mode_name(mode);

  Stage1Options s1;
  Stage2Options s2;
  s2.subdir = "stage2";
  switch (mode) {
    case AblateMode::no_moa:
      s2.use_gate = false;
      s2.routing = RoutingMode::AdapterOnly(0);
      break;
    case AblateMode::no_old:
      s1.use_general_half = false;
      break;
    case AblateMode::no_da:
      s1.train_task_adapters = true;
      s2.use_gate = false;
      s2.routing = RoutingMode::Vanilla();
      s2.continue_task_adapters = true;
      break;
  }
  Stage1Artifacts stage1_artifacts = run_stage1(rc, s1);
  return run_stage2(rc, {stage1_artifacts.checkpoint}, s2);
}

GridArtifacts grid(const fs::path& config_path, const std::vector<fs::path>& adapters) {
  RunConfig rc = parse_run_config(config_path);
  apply_seed_override(rc);
  LabeledDataset dataset = load_task_data(rc);

  AdapterLoad loaded;
  const int n_adapters = static_cast<int>(adapters.size());
  std::uint64_t base_seed = rc.run.seed;
  ModelConfig cfg;
  Vocab vocab;
  if (n_adapters > 0) {
    loaded = load_adapters(adapters);
    cfg = loaded.base_config;
    vocab = loaded.vocab;
    base_seed = cfg.init_seed;
  } else {
    std::vector<std::string> texts;
    for (const auto& ex : dataset.train) {
      texts.push_back(ex.text);
      if (!ex.text2.empty()) texts.push_back(ex.text2);
    }
    for (const auto& ex : dataset.validation) {
      texts.push_back(ex.text);
      if (!ex.text2.empty()) texts.push_back(ex.text2);
    }
    vocab = Vocab::build(texts, rc.vocab_max_size);
    cfg = rc.model;
    cfg.vocab_size = vocab.size();
  }
  cfg.num_domain_adapters = n_adapters;
  cfg.use_moa_gate = n_adapters > 0;
  cfg.task_adapter_style = rc.model.task_adapter_style;
  cfg.gate_style = rc.model.gate_style;
  cfg.gate_hidden_dim = rc.model.gate_hidden_dim;
  cfg.gate_input = rc.model.gate_input;
  cfg.dropout = rc.model.dropout;
  cfg.task_kind = rc.stage2.task;
  cfg.num_classes = rc.stage2.task == TaskKind::classification ? rc.stage2.num_classes : 0;
  cfg.init_seed = base_seed;
  validate(cfg);

  const std::uint64_t seed = rc.run.seed;
  RoutingMode routing =
      cfg.use_moa_gate
          ? RoutingMode::Gated()
          : (n_adapters > 0 ? RoutingMode::AdapterOnly(0) : RoutingMode::Vanilla());

  auto make_model = [&]() {
    ParameterStore params = build_parameters(cfg, base_seed);
    Model model{cfg, vocab, std::move(params)};
    if (!loaded.tensors.empty()) model.params.load_values(loaded.tensors);
    reinit_parameters(model.params, cfg, freeze_mask(2, cfg), seed);
    return model;
  };

  FewShotSplit split = make_split(dataset, rc.stage2.task, rc.stage2.few_shot_k, seed);
  Stage2Config base;
  base.epochs = rc.stage2.epochs;
  base.warmup_epochs = rc.stage2.warmup_epochs;
  base.weight_decay = rc.stage2.weight_decay;
  base.metric = rc.stage2.metric;
  base.seed = seed;
  base.routing = routing;

  GridArtifacts artifacts;
  artifacts.result =
      grid_search(make_model, split, base, rc.stage2.lr_grid, rc.stage2.batch_grid);

  fs::create_directories(rc.run.output_dir);
  std::ostringstream csv;
  csv << "lr,batch_size,val_" << rc.stage2.metric << "\n";
  for (const GridPoint& p : artifacts.result.all)
    csv << fmt(p.lr) << "," << p.batch_size << "," << fmt(p.val_metric) << "\n";
  artifacts.grid_csv = rc.run.output_dir / "grid.csv";
  write_text(artifacts.grid_csv, csv.str());

  std::ostringstream best;
  best << "lr " << fmt(artifacts.result.best.lr) << "\n";
  best << "batch_size " << artifacts.result.best.batch_size << "\n";
  best << "val_" << rc.stage2.metric << " " << fmt(artifacts.result.best.val_metric) << "\n";
  artifacts.best_txt = rc.run.output_dir / "best.txt";
  write_text(artifacts.best_txt, best.str());

  std::cout << "grid best lr=" << fmt(artifacts.result.best.lr)
            << " batch_size=" << artifacts.result.best.batch_size
            << " val=" << fmt(artifacts.result.best.val_metric) << "\n";
  return artifacts;
}

int handle_command_errors() {
  try {
    throw;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << "\n";
    return kExitCheckpoint;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace mixda::commands
