#include "mixda/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <unordered_set>

namespace mixda {

std::int64_t shape_numel(const Shape& s) {
  std::int64_t n = 1;
  for (int e : s) n *= e;
  return n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << ", ";
    os << s[i];
  }
  os << "]";
  return os.str();
}

namespace detail {

namespace {
std::atomic<std::uint64_t> g_next_node_id{1};
}

std::shared_ptr<Node> make_node(Shape shape) {
  auto n = std::make_shared<Node>();
  n->value.assign(static_cast<std::size_t>(shape_numel(shape)), 0.0);
  n->shape = std::move(shape);
  n->id = g_next_node_id.fetch_add(1, std::memory_order_relaxed);
  return n;
}

}  // namespace detail

namespace {

using detail::Node;
using NodePtr = std::shared_ptr<Node>;

NodePtr op_node(Shape shape, std::initializer_list<Tensor> parents) {
  auto n = detail::make_node(std::move(shape));
  for (const Tensor& p : parents) {
    n->parents.push_back(p.handle());
    if (p.requires_grad()) n->requires_grad = true;
  }
  return n;
}

NodePtr op_node(Shape shape, const std::vector<Tensor>& parents) {
  auto n = detail::make_node(std::move(shape));
  for (const Tensor& p : parents) {
    n->parents.push_back(p.handle());
    if (p.requires_grad()) n->requires_grad = true;
  }
  return n;
}

void require_defined(const Tensor& t, const char* what) {
  if (!t.defined()) throw DimensionError(std::string(what) + ": undefined tensor");
}

void require_2d(const Tensor& t, const char* what) {
  require_defined(t, what);
  if (t.shape().size() != 2)
    throw DimensionError(std::string(what) + ": expected 2-d tensor, got " + shape_str(t.shape()));
}

}  // namespace

// --- Tensor ----------------------------------------------------------------

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  auto n = detail::make_node(std::move(shape));
  n->requires_grad = requires_grad;
  if (requires_grad) n->ensure_grad();
  return Tensor(std::move(n));
}

Tensor Tensor::full(Shape shape, double v) {
  auto n = detail::make_node(std::move(shape));
  std::fill(n->value.begin(), n->value.end(), v);
  return Tensor(std::move(n));
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  if (static_cast<std::int64_t>(values.size()) != shape_numel(shape))
    throw DimensionError("Tensor::from: " + std::to_string(values.size()) +
                         " values for shape " + shape_str(shape));
  auto n = detail::make_node(std::move(shape));
  n->value = std::move(values);
  n->requires_grad = requires_grad;
  if (requires_grad) n->ensure_grad();
  return Tensor(std::move(n));
}

Tensor Tensor::scalar(double v) { return Tensor::from({1}, {v}); }

int Tensor::rows() const {
  const Shape& s = node_->shape;
  if (s.size() == 2) return s[0];
  if (s.size() == 1) return 1;
  throw DimensionError("rows(): tensor is not 1-d or 2-d: " + shape_str(s));
}

int Tensor::cols() const {
  const Shape& s = node_->shape;
  if (s.size() == 2) return s[1];
  if (s.size() == 1) return s[0];
  throw DimensionError("cols(): tensor is not 1-d or 2-d: " + shape_str(s));
}

double Tensor::item() const {
  if (size() != 1) throw DimensionError("item(): tensor has " + std::to_string(size()) + " elements");
  return node_->value[0];
}

void Tensor::zero_grad() {
  if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Tensor Tensor::clone_detached() const {
  auto n = detail::make_node(node_->shape);
  n->value = node_->value;
  return Tensor(std::move(n));
}

// --- matmul / transpose ------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_2d(a, "matmul lhs");
  require_2d(b, "matmul rhs");
  const int m = a.shape()[0], k = a.shape()[1];
  const int k2 = b.shape()[0], n = b.shape()[1];
  if (k != k2)
    throw DimensionError("matmul: inner extents differ: " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()));
  auto node = op_node({m, n}, {a, b});
  {
    const double* A = a.data().data();
    const double* B = b.data().data();
    double* C = node->value.data();
    for (int i = 0; i < m; ++i)
      for (int kk = 0; kk < k; ++kk) {
        const double aik = A[i * k + kk];
        if (aik == 0.0) continue;
        const double* Brow = B + kk * n;
        double* Crow = C + i * n;
        for (int j = 0; j < n; ++j) Crow[j] += aik * Brow[j];
      }
  }
  node->backward = [m, k, n](Node& self) {
    Node* pa = self.parents[0].get();
    Node* pb = self.parents[1].get();
    const double* G = self.grad.data();
    const double* A = pa->value.data();
    const double* B = pb->value.data();
    if (pa->requires_grad) {
      pa->ensure_grad();
      double* dA = pa->grad.data();
      // dA += G * B^T
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
          const double g = G[i * n + j];
          if (g == 0.0) continue;
          const double* Brow = B;  // column j walks rows of B
          for (int kk = 0; kk < k; ++kk) dA[i * k + kk] += g * Brow[kk * n + j];
        }
    }
    if (pb->requires_grad) {
      pb->ensure_grad();
      double* dB = pb->grad.data();
      // dB += A^T * G
      for (int i = 0; i < m; ++i)
        for (int kk = 0; kk < k; ++kk) {
          const double av = A[i * k + kk];
          if (av == 0.0) continue;
          const double* Grow = G + i * n;
          double* Brow = dB + kk * n;
          for (int j = 0; j < n; ++j) Brow[j] += av * Grow[j];
        }
    }
  };
  return Tensor::wrap(node);
}

Tensor transpose(const Tensor& x) {
  require_2d(x, "transpose");
  const int m = x.shape()[0], n = x.shape()[1];
  auto node = op_node({n, m}, {x});
  const double* X = x.data().data();
  double* Y = node->value.data();
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) Y[j * m + i] = X[i * n + j];
  node->backward = [m, n](Node& self) {
    Node* p = self.parents[0].get();
    if (!p->requires_grad) return;
    p->ensure_grad();
    const double* G = self.grad.data();
    double* D = p->grad.data();
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) D[i * n + j] += G[j * m + i];
  };
  return Tensor::wrap(node);
}

// --- unary elementwise -------------------------------------------------------

namespace {

template <class Fwd, class Bwd>
Tensor unary_op(const Tensor& x, Fwd fwd, Bwd dydx, const char* what) {
  require_defined(x, what);
  auto node = op_node(x.shape(), {x});
  const double* X = x.data().data();
  double* Y = node->value.data();
  const std::size_t n = node->value.size();
  for (std::size_t i = 0; i < n; ++i) Y[i] = fwd(X[i]);
  node->backward = [dydx](Node& self) {
    Node* p = self.parents[0].get();
    if (!p->requires_grad) return;
    p->ensure_grad();
    const std::size_t n = self.value.size();
    for (std::size_t i = 0; i < n; ++i)
      p->grad[i] += self.grad[i] * dydx(p->value[i], self.value[i]);
  };
  return Tensor::wrap(node);
}

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

}  // namespace

Tensor relu(const Tensor& x) {
  return unary_op(
      x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; }, "relu");
}

Tensor gelu(const Tensor& x) {
  return unary_op(
      x,
      [](double v) {
        const double t = std::tanh(kGeluC * (v + kGeluA * v * v * v));
        return 0.5 * v * (1.0 + t);
      },
      [](double v, double) {
        const double t = std::tanh(kGeluC * (v + kGeluA * v * v * v));
        const double dt = (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluA * v * v);
        return 0.5 * (1.0 + t) + 0.5 * v * dt;
      },
      "gelu");
}

namespace {
double sigmoid_scalar(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}
}  // namespace

Tensor sigmoid(const Tensor& x) {
  return unary_op(
      x, [](double v) { return sigmoid_scalar(v); },
      [](double, double y) { return y * (1.0 - y); }, "sigmoid");
}

Tensor scale(const Tensor& x, double c) {
  return unary_op(
      x, [c](double v) { return c * v; }, [c](double, double) { return c; }, "scale");
}

// --- binary elementwise with broadcasting -----------------------------------

namespace {

struct BroadcastPlan {
  Shape out;
  int rows = 1, cols = 1;
  // Index strides per operand: row stride and col stride into the flat value.
  std::int64_t ar = 0, ac = 0, br = 0, bc = 0;
};

bool is_row_vector(const Shape& s, int n) {
  return (s.size() == 1 && s[0] == n) || (s.size() == 2 && s[0] == 1 && s[1] == n);
}
bool is_col_vector(const Shape& s, int m) { return s.size() == 2 && s[0] == m && s[1] == 1; }

BroadcastPlan resolve_broadcast(const Tensor& a, const Tensor& b, const char* what) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  BroadcastPlan p;
  if (sa == sb) {
    p.out = sa;
    if (sa.size() == 2) {
      p.rows = sa[0];
      p.cols = sa[1];
    } else {
      p.rows = 1;
      p.cols = static_cast<int>(shape_numel(sa));
    }
    p.ar = p.br = p.cols;
    p.ac = p.bc = 1;
    return p;
  }
  auto plan_big_small = [&](const Shape& big, const Shape& small, bool a_is_big) -> BroadcastPlan {
    if (big.size() != 2)
      throw DimensionError(std::string(what) + ": cannot broadcast " + shape_str(sa) + " with " +
                           shape_str(sb));
    BroadcastPlan q;
    q.out = big;
    q.rows = big[0];
    q.cols = big[1];
    std::int64_t srow, scol;
    if (is_row_vector(small, big[1])) {
      srow = 0;
      scol = 1;
    } else if (is_col_vector(small, big[0])) {
      srow = 1;
      scol = 0;
    } else {
      throw DimensionError(std::string(what) + ": cannot broadcast " + shape_str(sa) + " with " +
                           shape_str(sb));
    }
    if (a_is_big) {
      q.ar = q.cols;
      q.ac = 1;
      q.br = srow;
      q.bc = scol;
    } else {
      q.br = q.cols;
      q.bc = 1;
      q.ar = srow;
      q.ac = scol;
    }
    return q;
  };
  if (shape_numel(sa) >= shape_numel(sb)) return plan_big_small(sa, sb, true);
  return plan_big_small(sb, sa, false);
}

template <class Fwd, class DA, class DB>
Tensor binary_op(const Tensor& a, const Tensor& b, Fwd fwd, DA da, DB db, const char* what) {
  require_defined(a, what);
  require_defined(b, what);
  BroadcastPlan p = resolve_broadcast(a, b, what);
  auto node = op_node(p.out, {a, b});
  const double* A = a.data().data();
  const double* B = b.data().data();
  double* Y = node->value.data();
  for (int i = 0; i < p.rows; ++i)
    for (int j = 0; j < p.cols; ++j)
      Y[i * p.cols + j] = fwd(A[i * p.ar + j * p.ac], B[i * p.br + j * p.bc]);
  node->backward = [p, da, db](Node& self) {
    Node* pa = self.parents[0].get();
    Node* pb = self.parents[1].get();
    const double* A = pa->value.data();
    const double* B = pb->value.data();
    const double* G = self.grad.data();
    if (pa->requires_grad) pa->ensure_grad();
    if (pb->requires_grad) pb->ensure_grad();
    for (int i = 0; i < p.rows; ++i)
      for (int j = 0; j < p.cols; ++j) {
        const double g = G[i * p.cols + j];
        const double av = A[i * p.ar + j * p.ac];
        const double bv = B[i * p.br + j * p.bc];
        if (pa->requires_grad) pa->grad[i * p.ar + j * p.ac] += g * da(av, bv);
        if (pb->requires_grad) pb->grad[i * p.br + j * p.bc] += g * db(av, bv);
      }
  };
  return Tensor::wrap(node);
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_op(
      a, b, [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; }, "add");
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_op(
      a, b, [](double x, double y) { return x * y; }, [](double, double y) { return y; },
      [](double x, double) { return x; }, "mul");
}

// --- layer norm --------------------------------------------------------------

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  require_2d(x, "layer_norm");
  const int rows = x.shape()[0], d = x.shape()[1];
  if (d == 0) throw DimensionError("layer_norm: zero feature dimension");
  if (shape_numel(gain.shape()) != d || shape_numel(bias.shape()) != d)
    throw DimensionError("layer_norm: gain/bias size must equal last extent " + std::to_string(d));
  auto node = op_node({rows, d}, {x, gain, bias});
  std::vector<double> mean(rows), inv_std(rows);
  {
    const double* X = x.data().data();
    const double* Gn = gain.data().data();
    const double* Bs = bias.data().data();
    double* Y = node->value.data();
    for (int i = 0; i < rows; ++i) {
      const double* xr = X + i * d;
      double mu = 0.0;
      for (int j = 0; j < d; ++j) mu += xr[j];
      mu /= d;
      double var = 0.0;
      for (int j = 0; j < d; ++j) {
        const double c = xr[j] - mu;
        var += c * c;
      }
      var /= d;
      const double is = 1.0 / std::sqrt(var + eps);
      mean[i] = mu;
      inv_std[i] = is;
      for (int j = 0; j < d; ++j) Y[i * d + j] = Gn[j] * ((xr[j] - mu) * is) + Bs[j];
    }
  }
  node->backward = [rows, d, mean = std::move(mean), inv_std = std::move(inv_std)](Node& self) {
    Node* px = self.parents[0].get();
    Node* pg = self.parents[1].get();
    Node* pb = self.parents[2].get();
    const double* X = px->value.data();
    const double* Gn = pg->value.data();
    const double* G = self.grad.data();
    if (pg->requires_grad) pg->ensure_grad();
    if (pb->requires_grad) pb->ensure_grad();
    if (px->requires_grad) px->ensure_grad();
    for (int i = 0; i < rows; ++i) {
      const double* xr = X + i * d;
      const double* gr = G + i * d;
      const double mu = mean[i], is = inv_std[i];
      if (pg->requires_grad || pb->requires_grad) {
        for (int j = 0; j < d; ++j) {
          const double xhat = (xr[j] - mu) * is;
          if (pg->requires_grad) pg->grad[j] += gr[j] * xhat;
          if (pb->requires_grad) pb->grad[j] += gr[j];
        }
      }
      if (px->requires_grad) {
        // dL/dxhat = g * gain; dx = is * (dxhat - mean(dxhat) - xhat * mean(dxhat*xhat))
        double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
        for (int j = 0; j < d; ++j) {
          const double dxh = gr[j] * Gn[j];
          const double xhat = (xr[j] - mu) * is;
          sum_dxhat += dxh;
          sum_dxhat_xhat += dxh * xhat;
        }
        const double m1 = sum_dxhat / d, m2 = sum_dxhat_xhat / d;
        for (int j = 0; j < d; ++j) {
          const double dxh = gr[j] * Gn[j];
          const double xhat = (xr[j] - mu) * is;
          px->grad[i * d + j] += is * (dxh - m1 - xhat * m2);
        }
      }
    }
  };
  return Tensor::wrap(node);
}

// --- softmax -----------------------------------------------------------------

Tensor softmax_rows(const Tensor& x) {
  require_2d(x, "softmax_rows");
  const int rows = x.shape()[0], n = x.shape()[1];
  if (n < 1) throw DimensionError("softmax_rows: empty rows");
  auto node = op_node({rows, n}, {x});
  const double* X = x.data().data();
  double* Y = node->value.data();
  for (int i = 0; i < rows; ++i) {
    const double* xr = X + i * n;
    double mx = xr[0];
    for (int j = 1; j < n; ++j) mx = std::max(mx, xr[j]);
    double z = 0.0;
    for (int j = 0; j < n; ++j) {
      const double e = std::exp(xr[j] - mx);
      Y[i * n + j] = e;
      z += e;
    }
    for (int j = 0; j < n; ++j) Y[i * n + j] /= z;
  }
  node->backward = [rows, n](Node& self) {
    Node* p = self.parents[0].get();
    if (!p->requires_grad) return;
    p->ensure_grad();
    const double* Y = self.value.data();
    const double* G = self.grad.data();
    for (int i = 0; i < rows; ++i) {
      double dot = 0.0;
      for (int j = 0; j < n; ++j) dot += G[i * n + j] * Y[i * n + j];
      for (int j = 0; j < n; ++j)
        p->grad[i * n + j] += Y[i * n + j] * (G[i * n + j] - dot);
    }
  };
  return Tensor::wrap(node);
}

// --- masked cross entropy ------------------------------------------------------

MaskedCrossEntropy masked_cross_entropy(const Tensor& logits, std::span<const int> labels) {
  require_2d(logits, "masked_cross_entropy");
  const int rows = logits.shape()[0], vocab = logits.shape()[1];
  if (static_cast<int>(labels.size()) != rows)
    throw DimensionError("masked_cross_entropy: " + std::to_string(labels.size()) +
                         " labels for " + std::to_string(rows) + " rows");
  int supervised = 0;
  for (int l : labels) {
    if (l == kIgnoreLabel) continue;
    if (l < 0 || l >= vocab)
      throw DataError("masked_cross_entropy: label " + std::to_string(l) + " outside [0, " +
                      std::to_string(vocab) + ")");
    ++supervised;
  }
  if (supervised == 0) throw DataError("masked_cross_entropy: no supervised positions");

  auto node = op_node({1}, {logits});
  std::vector<double> lse(rows, 0.0);
  std::vector<int> label_copy(labels.begin(), labels.end());
  {
    const double* X = logits.data().data();
    double total = 0.0;
    for (int i = 0; i < rows; ++i) {
      if (label_copy[i] == kIgnoreLabel) continue;
      const double* xr = X + i * vocab;
      double mx = xr[0];
      for (int j = 1; j < vocab; ++j) mx = std::max(mx, xr[j]);
      double z = 0.0;
      for (int j = 0; j < vocab; ++j) z += std::exp(xr[j] - mx);
      lse[i] = mx + std::log(z);
      total += lse[i] - xr[label_copy[i]];
    }
    node->value[0] = total / supervised;
  }
  node->backward = [rows, vocab, supervised, lse = std::move(lse),
                    labels = std::move(label_copy)](Node& self) {
    Node* p = self.parents[0].get();
    if (!p->requires_grad) return;
    p->ensure_grad();
    const double g = self.grad[0] / supervised;
    const double* X = p->value.data();
    for (int i = 0; i < rows; ++i) {
      if (labels[i] == kIgnoreLabel) continue;
      const double* xr = X + i * vocab;
      double* dr = p->grad.data() + i * vocab;
      for (int j = 0; j < vocab; ++j) dr[j] += g * std::exp(xr[j] - lse[i]);
      dr[labels[i]] -= g;
    }
  };
  return {Tensor::wrap(node), supervised};
}

// --- alignment loss -------------------------------------------------------------

Tensor l2_alignment(const std::vector<AlignmentPair>& pairs) {
  if (pairs.empty()) throw DimensionError("l2_alignment: empty pair list");
  std::vector<Tensor> candidates;
  candidates.reserve(pairs.size());
  std::vector<std::vector<double>> refs;
  std::vector<int> rows_per, cols_per;
  for (const auto& pr : pairs) {
    require_2d(pr.reference, "l2_alignment reference");
    require_2d(pr.candidate, "l2_alignment candidate");
    if (pr.reference.shape() != pr.candidate.shape())
      throw DimensionError("l2_alignment: pair shapes differ: " + shape_str(pr.reference.shape()) +
                           " vs " + shape_str(pr.candidate.shape()));
    candidates.push_back(pr.candidate);
    refs.emplace_back(pr.reference.data().begin(), pr.reference.data().end());
    rows_per.push_back(pr.reference.shape()[0]);
    cols_per.push_back(pr.reference.shape()[1]);
  }
  const int L = static_cast<int>(pairs.size());
  auto node = op_node({1}, candidates);
  {
    double total = 0.0;
    for (int l = 0; l < L; ++l) {
      const double* K = candidates[l].data().data();
      const double* F = refs[l].data();
      const std::size_t n = refs[l].size();
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double dlt = F[i] - K[i];
        acc += dlt * dlt;
      }
      total += acc / rows_per[l];
    }
    node->value[0] = total / L;
  }
  node->backward = [L, refs = std::move(refs), rows_per = std::move(rows_per)](Node& self) {
    const double g = self.grad[0];
    for (int l = 0; l < L; ++l) {
      Node* p = self.parents[l].get();
      if (!p->requires_grad) continue;
      p->ensure_grad();
      const double* F = refs[l].data();
      const double c = g * 2.0 / (static_cast<double>(rows_per[l]) * L);
      const std::size_t n = refs[l].size();
      for (std::size_t i = 0; i < n; ++i) p->grad[i] += c * (p->value[i] - F[i]);
    }
  };
  return Tensor::wrap(node);
}

// --- reductions ------------------------------------------------------------------

Tensor sum(const Tensor& x) {
  require_defined(x, "sum");
  auto node = op_node({1}, {x});
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  node->value[0] = acc;
  node->backward = [](Node& self) {
    Node* p = self.parents[0].get();
    if (!p->requires_grad) return;
    p->ensure_grad();
    const double g = self.grad[0];
    for (double& d : p->grad) d += g;
  };
  return Tensor::wrap(node);
}

Tensor mean_squared_error(const Tensor& pred, std::span<const double> target) {
  require_defined(pred, "mean_squared_error");
  if (static_cast<std::size_t>(pred.size()) != target.size())
    throw DimensionError("mean_squared_error: " + std::to_string(pred.size()) +
                         " predictions vs " + std::to_string(target.size()) + " targets");
  const std::size_t n = target.size();
  auto node = op_node({1}, {pred});
  std::vector<double> tgt(target.begin(), target.end());
  {
    double acc = 0.0;
    const double* P = pred.data().data();
    for (std::size_t i = 0; i < n; ++i) {
      const double dlt = P[i] - tgt[i];
      acc += dlt * dlt;
    }
    node->value[0] = acc / static_cast<double>(n);
  }
  node->backward = [n, tgt = std::move(tgt)](Node& self) {
    Node* p = self.parents[0].get();
    if (!p->requires_grad) return;
    p->ensure_grad();
    const double g = self.grad[0] * 2.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) p->grad[i] += g * (p->value[i] - tgt[i]);
  };
  return Tensor::wrap(node);
}

// --- gather / slice / concat --------------------------------------------------------

Tensor gather_rows(const Tensor& table, std::vector<int> ids) {
  require_2d(table, "gather_rows");
  const int rows = table.shape()[0], d = table.shape()[1];
  for (int id : ids)
    if (id < 0 || id >= rows)
      throw DataError("gather_rows: row id " + std::to_string(id) + " outside [0, " +
                      std::to_string(rows) + ")");
  const int out_rows = static_cast<int>(ids.size());
  auto node = op_node({out_rows, d}, {table});
  const double* T = table.data().data();
  double* Y = node->value.data();
  for (int i = 0; i < out_rows; ++i)
    std::copy(T + ids[i] * d, T + (ids[i] + 1) * d, Y + i * d);
  node->backward = [d, ids = std::move(ids)](Node& self) {
    Node* p = self.parents[0].get();
    if (!p->requires_grad) return;
    p->ensure_grad();
    const double* G = self.grad.data();
    for (std::size_t i = 0; i < ids.size(); ++i) {
      double* dst = p->grad.data() + static_cast<std::size_t>(ids[i]) * d;
      const double* src = G + i * d;
      for (int j = 0; j < d; ++j) dst[j] += src[j];
    }
  };
  return Tensor::wrap(node);
}

Tensor slice_rows(const Tensor& x, int begin, int end) {
  require_2d(x, "slice_rows");
  const int rows = x.shape()[0], d = x.shape()[1];
  if (begin < 0 || end > rows || begin >= end)
    throw DimensionError("slice_rows: range [" + std::to_string(begin) + ", " +
                         std::to_string(end) + ") for " + std::to_string(rows) + " rows");
  auto node = op_node({end - begin, d}, {x});
  std::copy(x.data().begin() + begin * d, x.data().begin() + end * d, node->value.begin());
  node->backward = [begin, d](Node& self) {
    Node* p = self.parents[0].get();
    if (!p->requires_grad) return;
    p->ensure_grad();
    const std::size_t n = self.value.size();
    for (std::size_t i = 0; i < n; ++i)
      p->grad[static_cast<std::size_t>(begin) * d + i] += self.grad[i];
  };
  return Tensor::wrap(node);
}

Tensor slice_cols(const Tensor& x, int begin, int end) {
  require_2d(x, "slice_cols");
  const int rows = x.shape()[0], d = x.shape()[1];
  if (begin < 0 || end > d || begin >= end)
    throw DimensionError("slice_cols: range [" + std::to_string(begin) + ", " +
                         std::to_string(end) + ") for " + std::to_string(d) + " cols");
  const int w = end - begin;
  auto node = op_node({rows, w}, {x});
  const double* X = x.data().data();
  double* Y = node->value.data();
  for (int i = 0; i < rows; ++i)
    std::copy(X + i * d + begin, X + i * d + end, Y + i * w);
  node->backward = [rows, d, begin, w](Node& self) {
    Node* p = self.parents[0].get();
    if (!p->requires_grad) return;
    p->ensure_grad();
    const double* G = self.grad.data();
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < w; ++j) p->grad[i * d + begin + j] += G[i * w + j];
  };
  return Tensor::wrap(node);
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw DimensionError("concat_rows: empty list");
  const int d = parts[0].shape().size() == 2 ? parts[0].shape()[1] : -1;
  int rows = 0;
  for (const Tensor& t : parts) {
    require_2d(t, "concat_rows");
    if (t.shape()[1] != d)
      throw DimensionError("concat_rows: column mismatch " + shape_str(t.shape()));
    rows += t.shape()[0];
  }
  auto node = op_node({rows, d}, parts);
  double* Y = node->value.data();
  std::vector<int> offsets;
  int off = 0;
  for (const Tensor& t : parts) {
    offsets.push_back(off);
    std::copy(t.data().begin(), t.data().end(), Y + static_cast<std::size_t>(off) * d);
    off += t.shape()[0];
  }
  node->backward = [d, offsets = std::move(offsets)](Node& self) {
    for (std::size_t k = 0; k < self.parents.size(); ++k) {
      Node* p = self.parents[k].get();
      if (!p->requires_grad) continue;
      p->ensure_grad();
      const double* src = self.grad.data() + static_cast<std::size_t>(offsets[k]) * d;
      for (std::size_t i = 0; i < p->value.size(); ++i) p->grad[i] += src[i];
    }
  };
  return Tensor::wrap(node);
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols: empty list");
  const int rows = parts[0].shape().size() == 2 ? parts[0].shape()[0] : -1;
  int d = 0;
  for (const Tensor& t : parts) {
    require_2d(t, "concat_cols");
    if (t.shape()[0] != rows)
      throw DimensionError("concat_cols: row mismatch " + shape_str(t.shape()));
    d += t.shape()[1];
  }
  auto node = op_node({rows, d}, parts);
  double* Y = node->value.data();
  std::vector<int> offsets, widths;
  {
    int off = 0;
    for (const Tensor& t : parts) {
      const int w = t.shape()[1];
      offsets.push_back(off);
      widths.push_back(w);
      const double* X = t.data().data();
      for (int i = 0; i < rows; ++i)
        std::copy(X + i * w, X + (i + 1) * w, Y + i * d + off);
      off += w;
    }
  }
  node->backward = [rows, d, offsets = std::move(offsets), widths = std::move(widths)](Node& self) {
    for (std::size_t k = 0; k < self.parents.size(); ++k) {
      Node* p = self.parents[k].get();
      if (!p->requires_grad) continue;
      p->ensure_grad();
      const int w = widths[k], off = offsets[k];
      const double* G = self.grad.data();
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < w; ++j) p->grad[i * w + j] += G[i * d + off + j];
    }
  };
  return Tensor::wrap(node);
}

Tensor detach(const Tensor& x) {
  require_defined(x, "detach");
  auto node = detail::make_node(x.shape());
  node->value.assign(x.data().begin(), x.data().end());
  return Tensor::wrap(node);
}

// --- backward sweep ------------------------------------------------------------------

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1)
    throw DimensionError("backward: loss must be a scalar tensor");
  // Post-order DFS; reversing yields a topological order from the loss down.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  struct Frame {
    Node* n;
    std::size_t next = 0;
  };
  std::vector<Frame> stack;
  stack.push_back({loss.node()});
  visited.insert(loss.node());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next < f.n->parents.size()) {
      Node* p = f.n->parents[f.next++].get();
      if (visited.insert(p).second) stack.push_back({p});
    } else {
      order.push_back(f.n);
      stack.pop_back();
    }
  }
  loss.node()->ensure_grad();
  loss.node()->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->requires_grad && n->backward && !n->grad.empty()) n->backward(*n);
  }
}

// --- finite differences ------------------------------------------------------------------

GradCheckReport grad_check(const std::function<Tensor()>& f,
                           const std::vector<std::pair<std::string, Tensor>>& params,
                           double eps) {
  for (const auto& [name, t] : params) {
    Tensor mut = t;
    mut.ensure_grad();
    mut.zero_grad();
  }
  Tensor loss = f();
  backward(loss);
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (const auto& [name, t] : params)
    analytic.emplace_back(t.grad().begin(), t.grad().end());

  GradCheckReport report;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor t = params[pi].second;
    auto vals = t.data();
    for (std::int64_t i = 0; i < t.size(); ++i) {
      const double saved = vals[i];
      vals[i] = saved + eps;
      const double up = f().item();
      vals[i] = saved - eps;
      const double down = f().item();
      vals[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[pi][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-2});
      const double rel = std::abs(a - numeric) / denom;
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_param = params[pi].first;
        report.worst_index = i;
        report.analytic = a;
        report.numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace mixda
