#include "doctest.h"

#include <cmath>
#include <vector>

#include "dcast/errors.hpp"
#include "dcast/graph.hpp"
#include "dcast/params.hpp"
#include "dcast/rng.hpp"
#include "support/fd_check.hpp"

using namespace dcast;
using namespace dcast::nn;

TEST_CASE("linear forward: identity weights pass input through") {
  NetworkParams p;
  const int w = p.add("w", Tensor({2, 2}, {1, 0, 0, 1}));
  const int b = p.add("b", Tensor({2}, {0, 0}));
  Graph g;
  Var x = g.input(Tensor({1, 2}, {1, 0}));
  Var y = g.add_bias(g.matmul(x, g.param(p, w)), g.param(p, b));
  CHECK(g.value(y)[0] == 1.0);
  CHECK(g.value(y)[1] == 0.0);
}

TEST_CASE("linear forward: hand matrix multiply with bias") {
  NetworkParams p;
  const int w = p.add("w", Tensor({2, 2}, {1, 0, 0, 1}));
  const int b = p.add("b", Tensor({2}, {3, 3}));
  Graph g;
  Var y = g.add_bias(g.matmul(g.input(Tensor({1, 2}, {1, 2})), g.param(p, w)), g.param(p, b));
  CHECK(g.value(y)[0] == doctest::Approx(4.0));
  CHECK(g.value(y)[1] == doctest::Approx(5.0));
}

TEST_CASE("linear forward: width mismatch is a configuration error") {
  NetworkParams p;
  const int w = p.add("w", Tensor({2, 2}, {1, 0, 0, 1}));
  Graph g;
  Var x = g.input(Tensor({1, 3}, {1, 2, 3}));
  CHECK_THROWS_AS((void)g.matmul(x, g.param(p, w)), ConfigError);
}

TEST_CASE("backward: loss = sum(x*W) gives all-ones weight gradient") {
  NetworkParams p;
  const int w = p.add("w", Tensor({2, 2}, {0.3, -0.4, 0.9, 0.1}));
  Graph g;
  Var y = g.matmul(g.input(Tensor({1, 2}, {1, 1})), g.param(p, w));
  // sum == mean * n
  Var loss = g.affine(g.mean_all(y), 2.0, 0.0);
  p.zero_grad();
  g.backward(loss);
  for (std::size_t i = 0; i < 4; ++i) CHECK(p.slot(0).grad[i] == doctest::Approx(1.0));
}

TEST_CASE("backward: parameter unused by the loss keeps a zero gradient") {
  NetworkParams p;
  const int used = p.add("used", Tensor({1, 1}, {2.0}));
  const int unused = p.add("unused", Tensor({1, 1}, {5.0}));
  Graph g;
  Var y = g.matmul(g.input(Tensor({1, 1}, {3.0})), g.param(p, used));
  (void)g.param(p, unused);
  p.zero_grad();
  g.backward(g.mean_all(y));
  CHECK(p.slot(used).grad[0] == doctest::Approx(3.0));
  CHECK(p.slot(unused).grad[0] == 0.0);
}

TEST_CASE("backward before any forward pass is a usage error") {
  Graph g;
  CHECK_THROWS_AS(g.backward(Var{}), std::logic_error);
}

TEST_CASE("non-scalar loss is rejected") {
  Graph g;
  Var x = g.input(Tensor({1, 2}, {1, 2}));
  CHECK_THROWS_AS(g.backward(x), ConfigError);
}

TEST_CASE("non-finite forward value is a hard numeric error") {
  Graph g;
  Var x = g.input(Tensor({1, 1}, {710.0}));  // exp overflow territory via square+mean chain
  CHECK_THROWS_AS((void)g.input(Tensor({1}, {std::nan("")})), NumericError);
  // squaring a huge finite value overflows to inf
  Var big = g.affine(x, 1e300, 0.0);
  CHECK_THROWS_AS((void)g.square(big), NumericError);
}

TEST_CASE("elementwise op gradients match finite differences") {
  Rng rng(42);
  NetworkParams p;
  const int a = p.add("a", dcast_test::random_tensor({2, 3}, rng));
  const int b = p.add("b", dcast_test::random_tensor({2, 3}, rng));
  auto loss = [&](bool bw) {
    Graph g;
    Var va = g.param(p, a);
    Var vb = g.param(p, b);
    Var mixed = g.mul(g.sigmoid(va), g.tanh(g.sub(va, vb)));
    Var out = g.mean_all(g.relu(g.add(mixed, g.affine(vb, 0.5, 0.1))));
    if (bw) g.backward(out);
    return g.value(out)[0];
  };
  CHECK(dcast_test::max_grad_error(p, loss) < 1e-4);
}

TEST_CASE("slice, concat, select_actions gradients match finite differences") {
  Rng rng(43);
  NetworkParams p;
  const int a = p.add("a", dcast_test::random_tensor({3, 4}, rng));
  const std::vector<int> actions{1, 0, 3};
  auto loss = [&](bool bw) {
    Graph g;
    Var va = g.param(p, a);
    Var left = g.slice_cols(va, 0, 2);
    Var right = g.slice_cols(va, 2, 4);
    Var joined = g.concat_cols(g.tanh(left), right);
    Var picked = g.select_actions(joined, actions);
    Var out = g.mean_all(g.square(picked));
    if (bw) g.backward(out);
    return g.value(out)[0];
  };
  CHECK(dcast_test::max_grad_error(p, loss) < 1e-4);
}

TEST_CASE("identical seed and inputs give bitwise-identical outputs and gradients") {
  auto run = [](std::vector<double>& grads_out) {
    Rng rng(1234);
    NetworkParams p;
    const int w = p.add("w", dcast_test::random_tensor({4, 4}, rng));
    Graph g;
    Var x = g.input(Tensor({2, 4}, {0.1, 0.2, 0.3, 0.4, -0.1, -0.2, -0.3, -0.4}));
    Var loss = g.mean_all(g.tanh(g.matmul(x, g.param(p, w))));
    p.zero_grad();
    g.backward(loss);
    grads_out.assign(p.slot(0).grad.data(), p.slot(0).grad.data() + 16);
    return g.value(loss)[0];
  };
  std::vector<double> g1, g2;
  const double l1 = run(g1);
  const double l2 = run(g2);
  CHECK(l1 == l2);
  CHECK(g1 == g2);
}
