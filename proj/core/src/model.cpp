#include "mixda/model.hpp"

#include <algorithm>
#include <cmath>

namespace mixda {

std::string to_string(AdapterAttachment v) {
  return v == AdapterAttachment::ffn_intermediate ? "ffn-intermediate" : "sublayer-input";
}
std::string to_string(TaskAdapterStyle v) {
  switch (v) {
    case TaskAdapterStyle::none: return "none";
    case TaskAdapterStyle::pfeiffer: return "pfeiffer";
    case TaskAdapterStyle::houlsby: return "houlsby";
  }
  return "?";
}
std::string to_string(GateStyle v) { return v == GateStyle::mlp ? "mlp" : "linear"; }
std::string to_string(GateInput v) {
  return v == GateInput::sublayer ? "sublayer" : "ffn-intermediate";
}
std::string to_string(TaskKind v) {
  switch (v) {
    case TaskKind::none: return "none";
    case TaskKind::classification: return "classification";
    case TaskKind::regression: return "regression";
  }
  return "?";
}

AdapterAttachment parse_adapter_attachment(const std::string& s) {
  if (s == "ffn-intermediate") return AdapterAttachment::ffn_intermediate;
  if (s == "sublayer-input") return AdapterAttachment::sublayer_input;
  throw ConfigError("unknown adapter_attachment '" + s + "'");
}
TaskAdapterStyle parse_task_adapter_style(const std::string& s) {
  if (s == "none") return TaskAdapterStyle::none;
  if (s == "pfeiffer") return TaskAdapterStyle::pfeiffer;
  if (s == "houlsby") return TaskAdapterStyle::houlsby;
  throw ConfigError("unknown task_adapter_style '" + s + "'");
}
GateStyle parse_gate_style(const std::string& s) {
  if (s == "mlp") return GateStyle::mlp;
  if (s == "linear") return GateStyle::linear;
  throw ConfigError("unknown gate_style '" + s + "'");
}
GateInput parse_gate_input(const std::string& s) {
  if (s == "sublayer") return GateInput::sublayer;
  if (s == "ffn-intermediate") return GateInput::ffn_intermediate;
  throw ConfigError("unknown gate_input '" + s + "'");
}
TaskKind parse_task_kind(const std::string& s) {
  if (s == "none") return TaskKind::none;
  if (s == "classification") return TaskKind::classification;
  if (s == "regression") return TaskKind::regression;
  throw ConfigError("unknown task kind '" + s + "'");
}

std::vector<int> default_adapter_layers(int num_layers) {
  std::vector<int> layers = {7 * num_layers / 24, 11 * num_layers / 24};
  for (int& l : layers) l = std::clamp(l, 0, num_layers - 1);
  std::sort(layers.begin(), layers.end());
  layers.erase(std::unique(layers.begin(), layers.end()), layers.end());
  return layers;
}

void validate(const ModelConfig& cfg) {
  if (cfg.vocab_size < Vocab::kNumReserved)
    throw ConfigError("model: vocab_size must cover the reserved tokens");
  if (cfg.hidden_dim < 1 || cfg.ffn_dim < 1 || cfg.num_layers < 1 || cfg.max_seq_len < 2)
    throw ConfigError("model: dimensions must be positive (and max_seq_len >= 2)");
  if (cfg.num_heads < 1 || cfg.hidden_dim % cfg.num_heads != 0)
    throw ConfigError("model: hidden_dim must be divisible by num_heads");
  for (int l : cfg.adapter_layers)
    if (l < 0 || l >= cfg.num_layers)
      throw ConfigError("model: adapter_layers entry " + std::to_string(l) +
                        " outside [0, " + std::to_string(cfg.num_layers) + ")");
  if (cfg.adapter_reduction < 1 || cfg.task_adapter_reduction < 1)
    throw ConfigError("model: reduction factors must be >= 1");
  if (cfg.num_domain_adapters < 0) throw ConfigError("model: negative adapter count");
  if (cfg.num_domain_adapters > 0 && cfg.adapter_layers.empty())
    throw ConfigError("model: domain adapters configured but adapter_layers is empty");
  if (cfg.use_moa_gate && cfg.num_domain_adapters < 1)
    throw ConfigError("model: the MoA gate needs at least one domain adapter");
  if (cfg.dropout < 0.0 || cfg.dropout >= 1.0)
    throw ConfigError("model: dropout must lie in [0, 1)");
  if (cfg.task_kind == TaskKind::classification && cfg.num_classes < 2)
    throw ConfigError("model: classification needs at least 2 classes");
}

// --- parameter registry -----------------------------------------------------

namespace {

constexpr double kBaseInitStd = 0.06;

enum class InitKind { zeros, ones, base_normal, fan_in_uniform };

struct ParamSpec {
  std::string name;
  Shape shape;
  InitKind init;
};

std::vector<ParamSpec> collect_specs(const ModelConfig& cfg) {
  std::vector<ParamSpec> specs;
  const int d = cfg.hidden_dim, f = cfg.ffn_dim;
  auto push = [&](std::string name, Shape shape, InitKind init) {
    specs.push_back({std::move(name), std::move(shape), init});
  };
  auto push_norm = [&](const std::string& prefix) {
    push(prefix + ".gain", {d}, InitKind::ones);
    push(prefix + ".bias", {d}, InitKind::zeros);
  };
  auto push_linear = [&](const std::string& prefix, int in, int out, InitKind w_init) {
    push(prefix + ".weight", {in, out}, w_init);
    push(prefix + ".bias", {out}, InitKind::zeros);
  };
  // Bottlenecks start as the zero map: small random down, zero up.
  auto push_bottleneck = [&](const std::string& prefix, int in, int mid, int out) {
    push(prefix + ".down.weight", {in, mid}, InitKind::fan_in_uniform);
    push(prefix + ".down.bias", {mid}, InitKind::zeros);
    push(prefix + ".up.weight", {mid, out}, InitKind::zeros);
    push(prefix + ".up.bias", {out}, InitKind::zeros);
  };

  push("embedding.token.weight", {cfg.vocab_size, d}, InitKind::base_normal);
  push("embedding.position.weight", {cfg.max_seq_len, d}, InitKind::base_normal);

  const bool adapters_on = cfg.num_domain_adapters > 0;
  const std::set<int> adapter_layers(cfg.adapter_layers.begin(), cfg.adapter_layers.end());
  for (int i = 0; i < cfg.num_layers; ++i) {
    const std::string L = "layer." + std::to_string(i) + ".";
    push_norm(L + "attn.norm");
    push_linear(L + "attn.query", d, d, InitKind::base_normal);
    push_linear(L + "attn.key", d, d, InitKind::base_normal);
    push_linear(L + "attn.value", d, d, InitKind::base_normal);
    push_linear(L + "attn.out", d, d, InitKind::base_normal);
    if (cfg.task_adapter_style == TaskAdapterStyle::houlsby)
      push_bottleneck(L + "task_adapter.attn", d, cfg.task_adapter_bottleneck(), d);
    push_norm(L + "ffn.norm");
    push_linear(L + "ffn.in", d, f, InitKind::base_normal);
    push_linear(L + "ffn.out", f, d, InitKind::base_normal);
    if (adapters_on && adapter_layers.count(i)) {
      for (int a = 0; a < cfg.num_domain_adapters; ++a)
        push_bottleneck(L + "domain_adapter." + std::to_string(a), cfg.adapter_input_dim(),
                        cfg.adapter_bottleneck(), d);
      if (cfg.use_moa_gate) {
        if (cfg.gate_style == GateStyle::mlp) {
          push(L + "moa_gate.down.weight", {cfg.gate_input_dim(), cfg.gate_hidden()},
               InitKind::fan_in_uniform);
          push(L + "moa_gate.up.weight", {cfg.gate_hidden(), cfg.num_experts()},
               InitKind::zeros);
        } else {
          push(L + "moa_gate.weight", {cfg.gate_input_dim(), cfg.num_experts()},
               InitKind::zeros);
        }
      }
    }
    if (cfg.task_adapter_style != TaskAdapterStyle::none)
      push_bottleneck(L + "task_adapter.ffn", d, cfg.task_adapter_bottleneck(), d);
  }

  push("final_norm.gain", {d}, InitKind::ones);
  push("final_norm.bias", {d}, InitKind::zeros);
  if (!cfg.tie_lm_head)
    push("lm_head.weight", {d, cfg.vocab_size}, InitKind::base_normal);
  push("lm_head.bias", {cfg.vocab_size}, InitKind::zeros);
  if (cfg.task_kind != TaskKind::none) {
    const int width = cfg.task_kind == TaskKind::classification ? cfg.num_classes : 1;
    push("task_head.weight", {d, width}, InitKind::zeros);
    push("task_head.bias", {width}, InitKind::zeros);
  }
  return specs;
}

Tensor init_tensor(const ParamSpec& spec, std::uint64_t seed) {
  Tensor t = Tensor::zeros(spec.shape);
  auto data = t.data();
  switch (spec.init) {
    case InitKind::zeros:
      break;
    case InitKind::ones:
      std::fill(data.begin(), data.end(), 1.0);
      break;
    case InitKind::base_normal: {
      Rng rng(hash_seed(seed, spec.name));
      for (double& v : data) v = rng.normal(0.0, kBaseInitStd);
      break;
    }
    case InitKind::fan_in_uniform: {
      Rng rng(hash_seed(seed, spec.name));
      const double bound = 1.0 / std::sqrt(static_cast<double>(spec.shape[0]));
      for (double& v : data) v = rng.uniform(-bound, bound);
      break;
    }
  }
  return t;
}

}  // namespace

std::vector<std::pair<std::string, Shape>> parameter_shapes(const ModelConfig& cfg) {
  std::vector<std::pair<std::string, Shape>> out;
  for (auto& spec : collect_specs(cfg)) out.emplace_back(spec.name, spec.shape);
  return out;
}

ParameterStore build_parameters(const ModelConfig& cfg, std::uint64_t seed) {
  validate(cfg);
  ParameterStore store;
  for (const ParamSpec& spec : collect_specs(cfg)) store.add(spec.name, init_tensor(spec, seed));
  return store;
}

void reinit_parameters(ParameterStore& store, const ModelConfig& cfg,
                       const std::set<std::string>& names, std::uint64_t seed) {
  for (const ParamSpec& spec : collect_specs(cfg)) {
    if (!names.count(spec.name)) continue;
    Tensor fresh = init_tensor(spec, seed);
    Tensor& dst = store.ref(spec.name);
    std::copy(fresh.data().begin(), fresh.data().end(), dst.data().begin());
  }
}

Model build_model(ModelConfig cfg, Vocab vocab, std::uint64_t seed) {
  cfg.vocab_size = vocab.size();
  cfg.init_seed = seed;
  Model m{cfg, std::move(vocab), build_parameters(cfg, seed)};
  return m;
}

// --- forward pass -------------------------------------------------------------

BatchView batch_view(const MLMBatch& b) {
  return {b.input_ids.v, b.attention_mask.v, b.input_ids.rows, b.input_ids.cols};
}

BatchView batch_view(const TaskBatch& b) {
  return {b.input_ids.v, b.attention_mask.v, b.input_ids.rows, b.input_ids.cols};
}

namespace {

Tensor apply_dropout(const Tensor& x, double p, const ForwardOptions& opts) {
  if (!opts.train || p <= 0.0) return x;
  if (opts.rng == nullptr) throw ConfigError("dropout in train mode requires an rng");
  Tensor mask = Tensor::zeros(x.shape());
  auto m = mask.data();
  const double keep = 1.0 - p;
  for (double& v : m) v = opts.rng->uniform() < keep ? 1.0 / keep : 0.0;
  return mul(x, mask);
}

// Scaled dot-product attention over all sequences and heads; the additive key
// mask silences padded positions.
Tensor multi_head_attention(const Tensor& x, const ParameterStore& store, const ModelConfig& cfg,
                            const std::string& prefix, const BatchView& batch,
                            const ForwardOptions& opts) {
  const int d = cfg.hidden_dim, heads = cfg.num_heads, hd = cfg.head_dim();
  const int B = batch.batch, T = batch.seq_len;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(hd));

  Tensor q = add(matmul(x, store.at(prefix + "query.weight")), store.at(prefix + "query.bias"));
  Tensor k = add(matmul(x, store.at(prefix + "key.weight")), store.at(prefix + "key.bias"));
  Tensor v = add(matmul(x, store.at(prefix + "value.weight")), store.at(prefix + "value.bias"));

  std::vector<Tensor> seq_outputs;
  seq_outputs.reserve(B);
  for (int b = 0; b < B; ++b) {
    Tensor qb = slice_rows(q, b * T, (b + 1) * T);
    Tensor kb = slice_rows(k, b * T, (b + 1) * T);
    Tensor vb = slice_rows(v, b * T, (b + 1) * T);
    // Additive mask over key positions, shared by every head of this sequence.
    std::vector<double> mask_row(static_cast<std::size_t>(T), 0.0);
    for (int t = 0; t < T; ++t)
      if (batch.attention_mask[static_cast<std::size_t>(b) * T + t] == 0) mask_row[t] = -1e30;
    Tensor key_mask = Tensor::from({T}, mask_row);

    std::vector<Tensor> head_outputs;
    head_outputs.reserve(heads);
    for (int h = 0; h < heads; ++h) {
      Tensor qh = slice_cols(qb, h * hd, (h + 1) * hd);
      Tensor kh = slice_cols(kb, h * hd, (h + 1) * hd);
      Tensor vh = slice_cols(vb, h * hd, (h + 1) * hd);
      Tensor scores = scale(matmul(qh, transpose(kh)), inv_sqrt);
      scores = add(scores, key_mask);
      Tensor probs = softmax_rows(scores);
      probs = apply_dropout(probs, cfg.dropout, opts);
      head_outputs.push_back(matmul(probs, vh));
    }
    seq_outputs.push_back(concat_cols(head_outputs));
  }
  Tensor merged = B == 1 ? seq_outputs[0] : concat_rows(seq_outputs);
  return add(matmul(merged, store.at(prefix + "out.weight")), store.at(prefix + "out.bias"));
}

}  // namespace

Tensor bottleneck_forward(const Tensor& x, const ParameterStore& store,
                          const std::string& prefix) {
  Tensor mid = relu(add(matmul(x, store.at(prefix + ".down.weight")),
                        store.at(prefix + ".down.bias")));
  return add(matmul(mid, store.at(prefix + ".up.weight")), store.at(prefix + ".up.bias"));
}

GateForward moa_gate_forward(const Tensor& gate_in, const ParameterStore& store,
                             const ModelConfig& cfg, int layer,
                             const std::vector<Tensor>& experts) {
  const int E = cfg.num_experts();
  if (static_cast<int>(experts.size()) != E)
    throw ConfigError("moa_gate: " + std::to_string(experts.size()) + " expert outputs for " +
                      std::to_string(E) + " experts");
  const std::string prefix = "layer." + std::to_string(layer) + ".moa_gate.";
  Tensor logits;
  if (cfg.gate_style == GateStyle::mlp) {
    Tensor hid = relu(matmul(gate_in, store.at(prefix + "down.weight")));
    logits = matmul(hid, store.at(prefix + "up.weight"));
  } else {
    logits = matmul(gate_in, store.at(prefix + "weight"));
  }
  Tensor weights = sigmoid(logits);  // [rows, E]
  Tensor out;
  for (int e = 0; e < E; ++e) {
    Tensor w_col = slice_cols(weights, e, e + 1);  // [rows, 1] broadcast over features
    Tensor term = mul(experts[static_cast<std::size_t>(e)], w_col);
    out = e == 0 ? term : add(out, term);
  }
  return {out, weights};
}

EncoderOutput encoder_forward(const BatchView& batch, const ParameterStore& store,
                              const ModelConfig& cfg, const RoutingMode& mode,
                              const ForwardOptions& opts) {
  const int B = batch.batch, T = batch.seq_len, d = cfg.hidden_dim;
  if (B < 1 || T < 1) throw DimensionError("encoder: empty batch");
  if (T > cfg.max_seq_len)
    throw DimensionError("encoder: sequence length " + std::to_string(T) + " exceeds max " +
                         std::to_string(cfg.max_seq_len));
  if (static_cast<int>(batch.input_ids.size()) != B * T ||
      static_cast<int>(batch.attention_mask.size()) != B * T)
    throw DimensionError("encoder: batch spans do not match batch*seq_len");
  const int N = cfg.num_domain_adapters;
  if (mode.kind == RoutingMode::Kind::gated) {
    if (N < 1) throw ConfigError("encoder: gated routing with no domain adapters");
    if (!cfg.use_moa_gate) throw ConfigError("encoder: gated routing but the gate is disabled");
  }
  if (mode.kind == RoutingMode::Kind::adapter_only && (mode.adapter_index < 0 || mode.adapter_index >= N))
    throw ConfigError("encoder: adapter_only index " + std::to_string(mode.adapter_index) +
                      " outside [0, " + std::to_string(N) + ")");
  if (mode.kind == RoutingMode::Kind::forced &&
      static_cast<int>(mode.forced_weights.size()) != N + 1)
    throw ConfigError("encoder: forced routing needs " + std::to_string(N + 1) + " weights");

  for (int id : batch.input_ids)
    if (id < 0 || id >= cfg.vocab_size)
      throw DataError("encoder: token id " + std::to_string(id) + " outside vocabulary of " +
                      std::to_string(cfg.vocab_size));

  EncoderOutput out;
  out.batch = B;
  out.seq_len = T;

  std::vector<int> token_ids(batch.input_ids.begin(), batch.input_ids.end());
  std::vector<int> positions(static_cast<std::size_t>(B) * T);
  for (int b = 0; b < B; ++b)
    for (int t = 0; t < T; ++t) positions[static_cast<std::size_t>(b) * T + t] = t;

  Tensor x = add(gather_rows(store.at("embedding.token.weight"), std::move(token_ids)),
                 gather_rows(store.at("embedding.position.weight"), std::move(positions)));
  x = apply_dropout(x, cfg.dropout, opts);

  const std::set<int> adapter_layers(cfg.adapter_layers.begin(), cfg.adapter_layers.end());
  for (int i = 0; i < cfg.num_layers; ++i) {
    const std::string L = "layer." + std::to_string(i) + ".";

    Tensor u1 = layer_norm(x, store.at(L + "attn.norm.gain"), store.at(L + "attn.norm.bias"));
    Tensor attn = multi_head_attention(u1, store, cfg, L + "attn.", batch, opts);
    x = add(x, apply_dropout(attn, cfg.dropout, opts));
    if (cfg.task_adapter_style == TaskAdapterStyle::houlsby)
      x = add(x, bottleneck_forward(x, store, L + "task_adapter.attn"));

    Tensor u2 = layer_norm(x, store.at(L + "ffn.norm.gain"), store.at(L + "ffn.norm.bias"));
    Tensor ffn_mid = gelu(add(matmul(u2, store.at(L + "ffn.in.weight")),
                              store.at(L + "ffn.in.bias")));
    Tensor ffn_out = add(matmul(ffn_mid, store.at(L + "ffn.out.weight")),
                         store.at(L + "ffn.out.bias"));

    const bool has_adapters = N > 0 && adapter_layers.count(i) != 0;
    Tensor composed = ffn_out;
    if (has_adapters) {
      const Tensor& adapter_in =
          cfg.adapter_attachment == AdapterAttachment::ffn_intermediate ? ffn_mid : u2;
      auto adapter_out = [&](int a) {
        return bottleneck_forward(adapter_in, store, L + "domain_adapter." + std::to_string(a));
      };
      switch (mode.kind) {
        case RoutingMode::Kind::vanilla:
          composed = ffn_out;
          if (opts.capture) {
            LayerCapture cap;
            cap.layer = i;
            cap.ffn_output = ffn_out;
            for (int a = 0; a < N; ++a) cap.adapter_outputs.push_back(adapter_out(a));
            out.captures.push_back(std::move(cap));
          }
          break;
        case RoutingMode::Kind::adapter_only: {
          composed = adapter_out(mode.adapter_index);
          if (opts.capture) {
            LayerCapture cap;
            cap.layer = i;
            cap.ffn_output = ffn_out;
            for (int a = 0; a < N; ++a)
              cap.adapter_outputs.push_back(a == mode.adapter_index ? composed : adapter_out(a));
            out.captures.push_back(std::move(cap));
          }
          break;
        }
        case RoutingMode::Kind::gated:
        case RoutingMode::Kind::forced: {
          std::vector<Tensor> experts;
          experts.reserve(N + 1);
          for (int a = 0; a < N; ++a) experts.push_back(adapter_out(a));
          experts.push_back(ffn_out);
          if (mode.kind == RoutingMode::Kind::forced) {
            Tensor acc;
            for (int e = 0; e <= N; ++e) {
              Tensor term = scale(experts[static_cast<std::size_t>(e)], mode.forced_weights[e]);
              acc = e == 0 ? term : add(acc, term);
            }
            composed = acc;
          } else {
            const Tensor& gate_in =
                cfg.gate_input == GateInput::ffn_intermediate ? ffn_mid : u2;
            GateForward gf = moa_gate_forward(gate_in, store, cfg, i, experts);
            composed = gf.output;
            out.gate_traces.push_back({i, gf.weights});
          }
          if (opts.capture) {
            LayerCapture cap;
            cap.layer = i;
            cap.ffn_output = ffn_out;
            for (int a = 0; a < N; ++a) cap.adapter_outputs.push_back(experts[a]);
            out.captures.push_back(std::move(cap));
          }
          break;
        }
      }
    }
    x = add(x, apply_dropout(composed, cfg.dropout, opts));
    if (cfg.task_adapter_style != TaskAdapterStyle::none)
      x = add(x, bottleneck_forward(x, store, L + "task_adapter.ffn"));
  }

  out.hidden = layer_norm(x, store.at("final_norm.gain"), store.at("final_norm.bias"));
  return out;
}

Tensor lm_head_forward(const Tensor& hidden, const ParameterStore& store, const ModelConfig& cfg) {
  Tensor weight = cfg.tie_lm_head ? transpose(store.at("embedding.token.weight"))
                                  : store.at("lm_head.weight");
  return add(matmul(hidden, weight), store.at("lm_head.bias"));
}

Tensor task_head_forward(const Tensor& hidden, int batch, int seq_len,
                         const ParameterStore& store, const ModelConfig& cfg) {
  if (cfg.task_kind == TaskKind::none) throw ConfigError("task_head: no task configured");
  std::vector<int> cls_positions(static_cast<std::size_t>(batch));
  for (int b = 0; b < batch; ++b) cls_positions[b] = b * seq_len;
  Tensor pooled = gather_rows(hidden, std::move(cls_positions));
  return add(matmul(pooled, store.at("task_head.weight")), store.at("task_head.bias"));
}

// --- freezing -----------------------------------------------------------------

std::set<std::string> freeze_mask(int stage, const ModelConfig& cfg, int trained_adapter) {
  std::set<std::string> mask;
  if (stage == 1) {
    if (cfg.num_domain_adapters < 1)
      throw ConfigError("freeze_mask: stage 1 needs a domain adapter");
    if (trained_adapter < 0 || trained_adapter >= cfg.num_domain_adapters)
      throw ConfigError("freeze_mask: adapter index " + std::to_string(trained_adapter) +
                        " outside [0, " + std::to_string(cfg.num_domain_adapters) + ")");
    for (int l : cfg.adapter_layers) {
      const std::string prefix = "layer." + std::to_string(l) + ".domain_adapter." +
                                 std::to_string(trained_adapter) + ".";
      for (const char* leaf : {"down.weight", "down.bias", "up.weight", "up.bias"})
        mask.insert(prefix + leaf);
    }
    return mask;
  }
  if (stage == 2) {
    const bool has_task_adapter = cfg.task_adapter_style != TaskAdapterStyle::none;
    if (!has_task_adapter && !cfg.use_moa_gate)
      throw ConfigError("freeze_mask: stage 2 needs a task adapter or the MoA gate");
    for (const auto& [name, shape] : parameter_shapes(cfg)) {
      if (name.find(".task_adapter.") != std::string::npos ||
          name.find(".moa_gate.") != std::string::npos ||
          name.rfind("task_head.", 0) == 0)
        mask.insert(name);
    }
    return mask;
  }
  throw ConfigError("freeze_mask: stage must be 1 or 2");
}

std::uint64_t hash_parameters(const ParameterStore& store, const std::set<std::string>& names) {
  std::uint64_t h = 1469598103934665603ull;
  auto feed = [&h](const void* data, std::size_t len) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= p[i];
      h *= 1099511628211ull;
    }
  };
  for (const std::string& name : names) {
    feed(name.data(), name.size());
    const Tensor t = store.at(name);
    feed(t.data().data(), t.data().size() * sizeof(double));
  }
  return h;
}

std::uint64_t hash_all_except(const ParameterStore& store,
                              const std::set<std::string>& excluded) {
  std::set<std::string> names;
  for (const auto& [name, t] : store.items())
    if (!excluded.count(name)) names.insert(name);
  return hash_parameters(store, names);
}

}  // namespace mixda
