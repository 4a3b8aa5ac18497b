#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mixda/rng.hpp"
#include "mixda/tensor.hpp"

using namespace mixda;

namespace {

Tensor rand_tensor(Shape shape, Rng& rng, bool requires_grad = true) {
  Tensor t = Tensor::zeros(std::move(shape), requires_grad);
  for (double& v : t.data()) v = rng.uniform(-1.5, 1.5);
  return t;
}

// Central-difference check of a scalar-valued graph w.r.t. one input tensor.
double fd_max_rel_err(const std::function<Tensor()>& f, Tensor x, double eps = 1e-5) {
  return grad_check(f, {{"x", x}}, eps).max_rel_err;
}

}  // namespace

TEST_CASE("matmul values") {
  Tensor id = Tensor::from({2, 2}, {1, 0, 0, 1});
  Tensor m = Tensor::from({2, 2}, {3, -1, 2, 7});
  Tensor prod = matmul(id, m);
  for (int i = 0; i < 4; ++i) CHECK(prod.data()[i] == m.data()[i]);

  Tensor a = Tensor::from({2, 2}, {1, 2, 3, 4});
  Tensor b = Tensor::from({2, 1}, {5, 6});
  Tensor c = matmul(a, b);
  CHECK(c.shape() == Shape{2, 1});
  CHECK(c.data()[0] == doctest::Approx(17));
  CHECK(c.data()[1] == doctest::Approx(39));
}

TEST_CASE("matmul shape error names both operands") {
  Tensor a = Tensor::zeros({2, 3});
  Tensor b = Tensor::zeros({2, 3});
  CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("[2, 3]"), DimensionError);
}

TEST_CASE("matmul gradient matches finite differences") {
  Rng rng(7);
  Tensor a = rand_tensor({3, 4}, rng);
  Tensor b = rand_tensor({4, 2}, rng);
  auto f = [&] { return sum(matmul(a, b)); };
  CHECK(grad_check(f, {{"a", a}, {"b", b}}).max_rel_err < 1e-6);
}

TEST_CASE("elementwise forward values") {
  Tensor x = Tensor::from({3}, {-1, 0, 2});
  Tensor r = relu(x);
  CHECK(r.data()[0] == 0.0);
  CHECK(r.data()[1] == 0.0);
  CHECK(r.data()[2] == 2.0);

  CHECK(sigmoid(Tensor::scalar(0)).item() == doctest::Approx(0.5));
  CHECK(scale(Tensor::scalar(3), -2).item() == doctest::Approx(-6));

  // gelu at a few reference points of the tanh approximation
  auto ref_gelu = [](double v) {
    return 0.5 * v * (1.0 + std::tanh(0.7978845608028654 * (v + 0.044715 * v * v * v)));
  };
  Tensor g = gelu(Tensor::from({3}, {-1.0, 0.5, 2.0}));
  CHECK(g.data()[0] == doctest::Approx(ref_gelu(-1.0)));
  CHECK(g.data()[1] == doctest::Approx(ref_gelu(0.5)));
  CHECK(g.data()[2] == doctest::Approx(ref_gelu(2.0)));
}

TEST_CASE("gelu gradient at 0.5 matches finite differences") {
  Tensor x = Tensor::from({1}, {0.5}, true);
  auto f = [&] { return sum(gelu(x)); };
  CHECK(fd_max_rel_err(f, x) < 1e-6);
}

TEST_CASE("unary gradients on random inputs") {
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor x = rand_tensor({4, 3}, rng);
    CHECK(fd_max_rel_err([&] { return sum(gelu(x)); }, x) < 1e-6);
    CHECK(fd_max_rel_err([&] { return sum(sigmoid(x)); }, x) < 1e-6);
    CHECK(fd_max_rel_err([&] { return sum(scale(x, -1.7)); }, x) < 1e-6);
    CHECK(fd_max_rel_err([&] { return sum(mul(relu(x), x)); }, x) < 1e-6);
  }
}

TEST_CASE("binary broadcasting") {
  Tensor m = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor row = Tensor::from({3}, {10, 20, 30});
  Tensor col = Tensor::from({2, 1}, {100, 200});

  Tensor mr = add(m, row);
  CHECK(mr.data()[0] == 11);
  CHECK(mr.data()[5] == 36);

  Tensor mc = add(m, col);
  CHECK(mc.data()[0] == 101);
  CHECK(mc.data()[3] == 204);

  Tensor mm = mul(row, m);  // vector first also broadcasts
  CHECK(mm.shape() == Shape{2, 3});
  CHECK(mm.data()[4] == 100);

  CHECK_THROWS_AS(add(m, Tensor::zeros({4})), DimensionError);
  CHECK_THROWS_AS(mul(m, Tensor::zeros({3, 2})), DimensionError);
}

TEST_CASE("broadcast gradients match finite differences") {
  Rng rng(17);
  Tensor m = rand_tensor({3, 4}, rng);
  Tensor row = rand_tensor({4}, rng);
  Tensor col = rand_tensor({3, 1}, rng);
  auto f = [&] { return sum(mul(add(m, row), col)); };
  CHECK(grad_check(f, {{"m", m}, {"row", row}, {"col", col}}).max_rel_err < 1e-6);
}

TEST_CASE("layer_norm values") {
  const int d = 6;
  Tensor gain = Tensor::full({d}, 1.0);
  Tensor bias = Tensor::from({d}, {9, 8, 7, 6, 5, 4});
  // constant row: normalized value 0 everywhere, output equals bias
  Tensor x = Tensor::full({1, d}, 3.14);
  Tensor y = layer_norm(x, gain, bias);
  for (int j = 0; j < d; ++j) CHECK(y.data()[j] == doctest::Approx(bias.data()[j]));

  // row [1,3]: mean 2, variance 1; value is +/- 1/sqrt(1+eps)
  Tensor x2 = Tensor::from({1, 2}, {1, 3});
  Tensor y2 = layer_norm(x2, Tensor::full({2}, 1.0), Tensor::zeros({2}));
  const double expected = 1.0 / std::sqrt(1.0 + 1e-5);
  CHECK(y2.data()[0] == doctest::Approx(-expected).epsilon(1e-9));
  CHECK(y2.data()[1] == doctest::Approx(expected).epsilon(1e-9));

  CHECK_THROWS_AS(layer_norm(Tensor::zeros({2, 0}), Tensor::zeros({0}), Tensor::zeros({0})),
                  DimensionError);
}

TEST_CASE("layer_norm gradient matches finite differences") {
  Rng rng(19);
  Tensor x = rand_tensor({3, 5}, rng);
  Tensor gain = rand_tensor({5}, rng);
  Tensor bias = rand_tensor({5}, rng);
  auto f = [&] { return sum(mul(layer_norm(x, gain, bias), x)); };
  CHECK(grad_check(f, {{"x", x}, {"gain", gain}, {"bias", bias}}).max_rel_err < 1e-6);
}

TEST_CASE("softmax rows") {
  Tensor u = softmax_rows(Tensor::from({1, 3}, {0, 0, 0}));
  for (int j = 0; j < 3; ++j) CHECK(u.data()[j] == doctest::Approx(1.0 / 3));

  Tensor big = softmax_rows(Tensor::from({1, 2}, {1000, 0}));
  CHECK(big.data()[0] == doctest::Approx(1.0));
  CHECK(big.data()[1] == doctest::Approx(0.0));
  CHECK(std::isfinite(big.data()[0]));

  Tensor ln = softmax_rows(Tensor::from({1, 2}, {std::log(2.0), 0.0}));
  CHECK(ln.data()[0] == doctest::Approx(2.0 / 3).epsilon(1e-12));
  CHECK(ln.data()[1] == doctest::Approx(1.0 / 3).epsilon(1e-12));

  Rng rng(23);
  Tensor x = rand_tensor({4, 5}, rng);
  Tensor w = rand_tensor({4, 5}, rng, false);
  auto f = [&] { return sum(mul(softmax_rows(x), w)); };
  CHECK(fd_max_rel_err(f, x) < 1e-6);
}

TEST_CASE("masked cross entropy values") {
  const int V = 4;
  // uniform logits, one masked position -> ln 4
  Tensor logits = Tensor::zeros({2, V});
  std::vector<int> labels = {kIgnoreLabel, 2};
  auto ce = masked_cross_entropy(logits, labels);
  CHECK(ce.supervised == 1);
  CHECK(ce.loss.item() == doctest::Approx(std::log(4.0)).epsilon(1e-12));

  // certainty -> 0 (approached with a large margin)
  Tensor sure = Tensor::from({1, 2}, {200.0, 0.0});
  std::vector<int> one = {0};
  CHECK(masked_cross_entropy(sure, one).loss.item() == doctest::Approx(0.0));

  // two masked positions with p = 0.5 and p = 0.25 -> (ln2 + ln4)/2
  Tensor two = Tensor::from({2, 2}, {std::log(0.5), std::log(0.5),    // p(label 0) = 1/2
                                     std::log(0.25), std::log(0.75)});  // p(label 0) = 1/4
  std::vector<int> both = {0, 0};
  const double expected = (std::log(2.0) + std::log(4.0)) / 2.0;
  CHECK(masked_cross_entropy(two, both).loss.item() == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("masked cross entropy errors") {
  Tensor logits = Tensor::zeros({2, 3});
  std::vector<int> all_ignore = {kIgnoreLabel, kIgnoreLabel};
  CHECK_THROWS_WITH_AS(masked_cross_entropy(logits, all_ignore),
                       doctest::Contains("no supervised positions"), DataError);
  std::vector<int> out_of_range = {3, kIgnoreLabel};
  CHECK_THROWS_AS(masked_cross_entropy(logits, out_of_range), DataError);
}

TEST_CASE("masked cross entropy gradient") {
  Rng rng(29);
  Tensor logits = rand_tensor({5, 6}, rng);
  std::vector<int> labels = {2, kIgnoreLabel, 0, 5, kIgnoreLabel};
  auto f = [&] { return masked_cross_entropy(logits, labels).loss; };
  CHECK(fd_max_rel_err(f, logits) < 1e-6);
}

TEST_CASE("l2 alignment values") {
  Tensor f1 = Tensor::from({1, 2}, {1, 0});
  Tensor k_same = Tensor::from({1, 2}, {1, 0});
  CHECK(l2_alignment({{f1, k_same}}).item() == 0.0);

  Tensor k1 = Tensor::from({1, 2}, {0, 1});
  CHECK(l2_alignment({{f1, k1}}).item() == doctest::Approx(2.0));

  // two layers with per-layer values 2.0 and 4.0 -> 3.0
  Tensor f2 = Tensor::from({1, 1}, {2});
  Tensor k2 = Tensor::from({1, 1}, {0});  // squared distance 4
  CHECK(l2_alignment({{f1, k1}, {f2, k2}}).item() == doctest::Approx(3.0));

  CHECK_THROWS_AS(l2_alignment({}), DimensionError);
  CHECK_THROWS_AS(l2_alignment({{f1, f2}}), DimensionError);
}

TEST_CASE("l2 alignment averages over rows, sums over features") {
  // two token rows: squared distances 2 and 8, mean 5
  Tensor f = Tensor::from({2, 2}, {1, 0, 2, 2});
  Tensor k = Tensor::from({2, 2}, {0, 1, 0, 0});
  CHECK(l2_alignment({{f, k}}).item() == doctest::Approx(5.0));
}

TEST_CASE("l2 alignment gradient flows only to the candidate") {
  Rng rng(31);
  Tensor f = rand_tensor({3, 4}, rng);
  Tensor k = rand_tensor({3, 4}, rng);
  Tensor loss = l2_alignment({{f, k}});
  backward(loss);
  CHECK(k.has_grad());
  double knorm = 0;
  for (double g : k.grad()) knorm += std::abs(g);
  CHECK(knorm > 0.0);
  for (double g : f.grad()) CHECK(g == 0.0);  // reference side stays constant

  auto fn = [&] { return l2_alignment({{f, k}}); };
  CHECK(fd_max_rel_err(fn, k) < 1e-6);
}

TEST_CASE("backward basics") {
  Tensor x = Tensor::from({3}, {1, 2, 3}, true);
  backward(sum(x));
  for (double g : x.grad()) CHECK(g == 1.0);

  Tensor y = Tensor::from({2}, {1, 2}, true);
  backward(sum(mul(y, y)));
  CHECK(y.grad()[0] == doctest::Approx(2.0));
  CHECK(y.grad()[1] == doctest::Approx(4.0));

  CHECK_THROWS_AS(backward(Tensor::zeros({2})), DimensionError);
}

TEST_CASE("double use of a tensor doubles its gradient") {
  Tensor x = Tensor::from({2}, {3, -1}, true);
  Tensor used_twice = add(x, x);
  CHECK(used_twice.parent_count() == 2);  // one edge per use
  backward(sum(used_twice));
  CHECK(x.grad()[0] == doctest::Approx(2.0));
  CHECK(x.grad()[1] == doctest::Approx(2.0));
}

TEST_CASE("gradients of a weighted loss combination are linear") {
  Rng rng(37);
  const double lambda = 0.5;
  Tensor x = rand_tensor({4}, rng);

  auto loss_a = [&] { return sum(mul(x, x)); };
  auto loss_b = [&] { return sum(sigmoid(x)); };

  backward(loss_a());
  std::vector<double> ga(x.grad().begin(), x.grad().end());
  x.zero_grad();
  backward(loss_b());
  std::vector<double> gb(x.grad().begin(), x.grad().end());
  x.zero_grad();
  backward(add(scale(loss_a(), lambda), loss_b()));
  for (int i = 0; i < 4; ++i)
    CHECK(x.grad()[i] == doctest::Approx(lambda * ga[i] + gb[i]).epsilon(1e-12));
}

TEST_CASE("gather, slice and concat round trips") {
  Tensor table = Tensor::from({3, 2}, {1, 2, 3, 4, 5, 6}, true);
  Tensor picked = gather_rows(table, {2, 0, 2});
  CHECK(picked.data()[0] == 5);
  CHECK(picked.data()[2] == 1);
  CHECK(picked.data()[4] == 5);
  backward(sum(picked));
  CHECK(table.grad()[0] == 1.0);  // row 0 used once
  CHECK(table.grad()[2] == 0.0);  // row 1 unused
  CHECK(table.grad()[4] == 2.0);  // row 2 used twice
  CHECK_THROWS_AS(gather_rows(table, {3}), DataError);

  Rng rng(41);
  Tensor x = rand_tensor({4, 6}, rng);
  auto f = [&] {
    Tensor top = slice_rows(x, 0, 2);
    Tensor bottom = slice_rows(x, 2, 4);
    Tensor left = slice_cols(concat_rows({bottom, top}), 0, 3);
    Tensor right = slice_cols(concat_rows({bottom, top}), 3, 6);
    return sum(mul(concat_cols({right, left}), x));
  };
  CHECK(fd_max_rel_err(f, x) < 1e-6);
}

TEST_CASE("transpose and detach") {
  Tensor x = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6}, true);
  Tensor t = transpose(x);
  CHECK(t.shape() == Shape{3, 2});
  CHECK(t.data()[1] == 4);

  Tensor d = detach(x);
  CHECK_FALSE(d.requires_grad());
  CHECK(d.parent_count() == 0);
  CHECK(d.data()[5] == 6);
  CHECK(d.node_id() != x.node_id());
}

TEST_CASE("every differentiable op matches finite differences on seeded trials") {
  // 100 random small graphs mixing the op set; rel err < 1e-6 each.
  Rng rng(4242);
  for (int trial = 0; trial < 100; ++trial) {
    const int m = 1 + rng.uniform_int(0, 4);
    const int k = 1 + rng.uniform_int(0, 4);
    const int n = 1 + rng.uniform_int(0, 4);
    Tensor a = rand_tensor({m, k}, rng);
    Tensor b = rand_tensor({k, n}, rng);
    Tensor gain = rand_tensor({n}, rng);
    Tensor bias = rand_tensor({n}, rng);
    auto f = [&] {
      Tensor h = matmul(a, b);
      h = layer_norm(h, gain, bias);
      h = gelu(h);
      h = softmax_rows(add(h, transpose(slice_rows(transpose(h), 0, 1))));
      return sum(mul(h, sigmoid(h)));
    };
    auto report = grad_check(f, {{"a", a}, {"b", b}, {"gain", gain}, {"bias", bias}});
    CAPTURE(trial);
    CAPTURE(report.worst_param);
    CHECK(report.max_rel_err < 1e-6);
  }
}

TEST_CASE("grad_check reference behavior") {
  // f(x) = x^2 at x = 3: analytic 6, central differences exact for quadratics
  Tensor x = Tensor::from({1}, {3.0}, true);
  auto report = grad_check([&] { return mul(x, x); }, {{"x", x}});
  CHECK(report.max_rel_err < 1e-9);

  // constant function: zero gradient everywhere
  Tensor c = Tensor::from({3}, {1, 2, 3}, true);
  auto const_report = grad_check([&] { return Tensor::scalar(7.0); }, {{"c", c}});
  CHECK(const_report.max_rel_err == 0.0);
}

TEST_CASE("mean squared error") {
  Tensor pred = Tensor::from({3, 1}, {1, 2, 3}, true);
  std::vector<double> target = {1, 1, 5};
  Tensor loss = mean_squared_error(pred, target);
  CHECK(loss.item() == doctest::Approx((0.0 + 1.0 + 4.0) / 3.0));
  auto f = [&] { return mean_squared_error(pred, target); };
  CHECK(fd_max_rel_err(f, pred) < 1e-6);
}
