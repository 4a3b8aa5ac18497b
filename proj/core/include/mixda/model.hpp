#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mixda/data.hpp"
#include "mixda/rng.hpp"
#include "mixda/store.hpp"
#include "mixda/tensor.hpp"
#include "mixda/vocab.hpp"

namespace mixda {

enum class AdapterAttachment { ffn_intermediate, sublayer_input };
enum class TaskAdapterStyle { none, pfeiffer, houlsby };
enum class GateStyle { mlp, linear };
enum class GateInput { sublayer, ffn_intermediate };
enum class TaskKind { none, classification, regression };

struct ModelConfig {
  int vocab_size = 0;  // filled in once the vocabulary is built
  int hidden_dim = 32;
  int ffn_dim = 64;
  int num_layers = 2;
  int num_heads = 4;
  int max_seq_len = 32;
  std::vector<int> adapter_layers;  // which layers carry domain adapters
  int adapter_reduction = 16;
  AdapterAttachment adapter_attachment = AdapterAttachment::ffn_intermediate;
  int num_domain_adapters = 0;
  TaskAdapterStyle task_adapter_style = TaskAdapterStyle::none;
  int task_adapter_reduction = 16;
  bool use_moa_gate = false;
  GateStyle gate_style = GateStyle::mlp;
  int gate_hidden_dim = 0;  // 0 = gate input width / 16, floor 4
  GateInput gate_input = GateInput::sublayer;
  double dropout = 0.1;
  bool tie_lm_head = true;
  TaskKind task_kind = TaskKind::none;
  int num_classes = 0;
  std::uint64_t init_seed = 0;

  int head_dim() const { return hidden_dim / num_heads; }
  int adapter_input_dim() const {
    return adapter_attachment == AdapterAttachment::ffn_intermediate ? ffn_dim : hidden_dim;
  }
  int adapter_bottleneck() const { return std::max(1, adapter_input_dim() / adapter_reduction); }
  int task_adapter_bottleneck() const { return std::max(1, hidden_dim / task_adapter_reduction); }
  int gate_input_dim() const {
    return gate_input == GateInput::ffn_intermediate ? ffn_dim : hidden_dim;
  }
  int gate_hidden() const {
    return gate_hidden_dim > 0 ? gate_hidden_dim : std::max(4, gate_input_dim() / 16);
  }
  int num_experts() const { return num_domain_adapters + 1; }  // adapters first, FFN last
};

std::string to_string(AdapterAttachment v);
std::string to_string(TaskAdapterStyle v);
std::string to_string(GateStyle v);
std::string to_string(GateInput v);
std::string to_string(TaskKind v);
AdapterAttachment parse_adapter_attachment(const std::string& s);
TaskAdapterStyle parse_task_adapter_style(const std::string& s);
GateStyle parse_gate_style(const std::string& s);
GateInput parse_gate_input(const std::string& s);
TaskKind parse_task_kind(const std::string& s);

// Scales the reference placement (layers 7 and 11 of a 24-layer stack) to an
// arbitrary depth; duplicates collapse.
std::vector<int> default_adapter_layers(int num_layers);

void validate(const ModelConfig& cfg);

// Every parameter name with its shape, in registry order. The single source
// of truth shared by construction, checkpoint validation and accounting.
std::vector<std::pair<std::string, Shape>> parameter_shapes(const ModelConfig& cfg);

// Fresh parameters; each tensor's init stream is seeded by (seed, name) so a
// subset of the registry is reproducible independently of the rest.
ParameterStore build_parameters(const ModelConfig& cfg, std::uint64_t seed);

// Re-draws the named parameters from a different seed (Stage-2 modules get
// run-specific starts while the base stays pinned to its own seed).
void reinit_parameters(ParameterStore& store, const ModelConfig& cfg,
                       const std::set<std::string>& names, std::uint64_t seed);

struct Model {
  ModelConfig config;
  Vocab vocab;
  ParameterStore params;
};

Model build_model(ModelConfig cfg, Vocab vocab, std::uint64_t seed);

// --- routing -----------------------------------------------------------------

struct RoutingMode {
  enum class Kind { vanilla, adapter_only, gated, forced };
  Kind kind = Kind::vanilla;
  int adapter_index = 0;                // adapter_only
  std::vector<double> forced_weights;   // forced; length = num_experts

  static RoutingMode Vanilla() { return {}; }
  static RoutingMode AdapterOnly(int index) {
    RoutingMode m;
    m.kind = Kind::adapter_only;
    m.adapter_index = index;
    return m;
  }
  static RoutingMode Gated() {
    RoutingMode m;
    m.kind = Kind::gated;
    return m;
  }
  static RoutingMode Forced(std::vector<double> weights) {
    RoutingMode m;
    m.kind = Kind::forced;
    m.forced_weights = std::move(weights);
    return m;
  }
};

struct LayerCapture {
  int layer = 0;
  Tensor ffn_output;                   // F_l, [rows, d], pre-residual
  std::vector<Tensor> adapter_outputs; // K_l per adapter, same shape
};

struct GateTrace {
  int layer = 0;
  Tensor weights;  // [rows, num_experts], sigmoid outputs
};

struct EncoderOutput {
  Tensor hidden;  // [batch * seq_len, hidden_dim]
  int batch = 0;
  int seq_len = 0;
  std::vector<LayerCapture> captures;
  std::vector<GateTrace> gate_traces;
};

struct BatchView {
  std::span<const int> input_ids;
  std::span<const int> attention_mask;
  int batch = 0;
  int seq_len = 0;
};

BatchView batch_view(const MLMBatch& b);
BatchView batch_view(const TaskBatch& b);

struct ForwardOptions {
  bool train = false;   // enables dropout (requires rng)
  Rng* rng = nullptr;
  bool capture = false; // collect (F_l, K_l) pairs on adapter layers
};

EncoderOutput encoder_forward(const BatchView& batch, const ParameterStore& store,
                              const ModelConfig& cfg, const RoutingMode& mode,
                              const ForwardOptions& opts = {});

// Bottleneck forward: up(ReLU(down(x) + b_down)) + b_up, parameters found
// under the given name prefix ("layer.3.domain_adapter.0" etc).
Tensor bottleneck_forward(const Tensor& x, const ParameterStore& store,
                          const std::string& prefix);

struct GateForward {
  Tensor output;   // [rows, d]
  Tensor weights;  // [rows, E]
};

// Per-token sigmoid mixture over expert outputs (adapters first, FFN last).
// Weights are independent per expert; they do not sum to one.
GateForward moa_gate_forward(const Tensor& gate_in, const ParameterStore& store,
                             const ModelConfig& cfg, int layer,
                             const std::vector<Tensor>& experts);

Tensor lm_head_forward(const Tensor& hidden, const ParameterStore& store, const ModelConfig& cfg);

// Pools the first-token representation of each sequence and applies the task
// head: [B, num_classes] for classification, [B, 1] for regression.
Tensor task_head_forward(const Tensor& hidden, int batch, int seq_len,
                         const ParameterStore& store, const ModelConfig& cfg);

// Names trainable in the given stage: 1 = the domain adapter under training,
// 2 = task adapters + MoA gate + task head.
std::set<std::string> freeze_mask(int stage, const ModelConfig& cfg, int trained_adapter = 0);

// FNV-1a over the raw bytes of the named tensors; order-independent input is
// the sorted name list. Used by freezing checks.
std::uint64_t hash_parameters(const ParameterStore& store, const std::set<std::string>& names);
std::uint64_t hash_all_except(const ParameterStore& store, const std::set<std::string>& excluded);

}  // namespace mixda
