#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mixda/errors.hpp"

namespace mixda {

using Shape = std::vector<int>;

std::int64_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

// Label value marking unsupervised positions in masked-LM label grids.
inline constexpr int kIgnoreLabel = -100;

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until a gradient is needed
  bool requires_grad = false;
  std::uint64_t id = 0;
  std::vector<std::shared_ptr<Node>> parents;  // one entry per operand use
  std::function<void(Node&)> backward;         // scatter node.grad into parents

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
};

std::shared_ptr<Node> make_node(Shape shape);

}  // namespace detail

// Value-semantic handle to a node of the differentiation graph. Copies share
// the underlying storage; operations on Tensors build new nodes wired to
// their operands.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double v);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double v);
  static Tensor wrap(std::shared_ptr<detail::Node> node) { return Tensor(std::move(node)); }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::int64_t size() const { return static_cast<std::int64_t>(node_->value.size()); }
  int rows() const;
  int cols() const;

  std::span<const double> data() const { return node_->value; }
  std::span<double> data() { return node_->value; }
  double item() const;

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool rg) { node_->requires_grad = rg; }

  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> grad() { return node_->grad; }
  void ensure_grad() { node_->ensure_grad(); }
  void zero_grad();

  std::uint64_t node_id() const { return node_->id; }
  std::size_t parent_count() const { return node_->parents.size(); }

  // Deep copy of the value (no graph history, no grad).
  Tensor clone_detached() const;

  detail::Node* node() const { return node_.get(); }
  const std::shared_ptr<detail::Node>& handle() const { return node_; }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}
  std::shared_ptr<detail::Node> node_;
};

// --- core operations ------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& x);

Tensor relu(const Tensor& x);
Tensor gelu(const Tensor& x);     // tanh approximation, c = 0.7978845608028654
Tensor sigmoid(const Tensor& x);
Tensor scale(const Tensor& x, double c);

// Binary elementwise with broadcasting: equal shapes, a row vector [n]/[1,n]
// against [m,n], or a column vector [m,1] against [m,n].
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps = 1e-5);
Tensor softmax_rows(const Tensor& x);

struct MaskedCrossEntropy {
  Tensor loss;     // scalar: mean NLL over supervised positions
  int supervised;  // number of positions that carried a label
};
// logits [T, V]; labels length T with kIgnoreLabel at unsupervised rows.
MaskedCrossEntropy masked_cross_entropy(const Tensor& logits, std::span<const int> labels);

struct AlignmentPair {
  Tensor reference;  // treated as a constant; no gradient flows into it
  Tensor candidate;
};
// Mean over pairs of (squared L2 distance summed over features, averaged
// over rows). Gradient reaches only the candidate side.
Tensor l2_alignment(const std::vector<AlignmentPair>& pairs);

Tensor sum(const Tensor& x);
Tensor mean_squared_error(const Tensor& pred, std::span<const double> target);

Tensor gather_rows(const Tensor& table, std::vector<int> ids);
Tensor slice_rows(const Tensor& x, int begin, int end);
Tensor slice_cols(const Tensor& x, int begin, int end);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor concat_cols(const std::vector<Tensor>& parts);

// Constant copy: same value, no parents, no gradient.
Tensor detach(const Tensor& x);

// Reverse sweep from a scalar loss. Gradients accumulate (+=) into every
// reachable node that requires a gradient.
void backward(const Tensor& loss);

// --- finite-difference verification ---------------------------------------

struct GradCheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;
  std::int64_t worst_index = -1;
  double analytic = 0.0;
  double numeric = 0.0;
};

// f rebuilds the computation and returns the scalar loss. Checked parameters
// are perturbed in place between evaluations.
GradCheckReport grad_check(const std::function<Tensor()>& f,
                           const std::vector<std::pair<std::string, Tensor>>& params,
                           double eps = 1e-5);

}  // namespace mixda
