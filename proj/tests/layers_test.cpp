#include "doctest.h"

#include <cmath>
#include <vector>

#include "dcast/errors.hpp"
#include "dcast/graph.hpp"
#include "dcast/layers.hpp"
#include "dcast/rng.hpp"
#include "support/fd_check.hpp"

using namespace dcast;
using namespace dcast::nn;

TEST_CASE("conv1d: unit kernel is the identity") {
  NetworkParams p;
  const int w = p.add("w", Tensor({1, 1, 1}, {1.0}));
  const int b = p.add("b", Tensor({1}, {0.0}));
  Graph g;
  Var x = g.input(Tensor({1, 3, 1}, {1, 2, 3}));
  Var y = g.conv1d(x, g.param(p, w), g.param(p, b), 1);
  CHECK(g.value(y).shape() == std::vector<std::size_t>{1, 3, 1});
  CHECK(g.value(y)[0] == 1.0);
  CHECK(g.value(y)[1] == 2.0);
  CHECK(g.value(y)[2] == 3.0);
}

TEST_CASE("conv1d: hand convolution of [1,2,3] with kernel [1,1]") {
  NetworkParams p;
  const int w = p.add("w", Tensor({1, 2, 1}, {1.0, 1.0}));
  const int b = p.add("b", Tensor({1}, {0.0}));
  Graph g;
  Var y = g.conv1d(g.input(Tensor({1, 3, 1}, {1, 2, 3})), g.param(p, w), g.param(p, b), 1);
  CHECK(g.value(y).shape() == std::vector<std::size_t>{1, 2, 1});
  CHECK(g.value(y)[0] == doctest::Approx(3.0));
  CHECK(g.value(y)[1] == doctest::Approx(5.0));
}

TEST_CASE("conv1d: kernel longer than input is a configuration error") {
  NetworkParams p;
  const int w = p.add("w", Tensor({1, 3, 1}, {1, 1, 1}));
  const int b = p.add("b", Tensor({1}, {0.0}));
  Graph g;
  Var x = g.input(Tensor({1, 2, 1}, {1, 2}));
  CHECK_THROWS_AS((void)g.conv1d(x, g.param(p, w), g.param(p, b), 1), ConfigError);
}

TEST_CASE("lstm step with all-zero parameters maps any input to zero state") {
  Rng rng(1);
  NetworkParams p;
  LstmCell cell(p, rng, 3, 4, "lstm");
  for (std::size_t i = 0; i < p.count(); ++i) p.slot(static_cast<int>(i)).value.fill(0.0);
  Graph g;
  auto bp = cell.bind(g, p);
  Var x = g.input(Tensor({1, 3}, {0.7, -1.3, 2.2}));
  Var h = g.input(Tensor::zeros({1, 4}));
  Var c = g.input(Tensor::zeros({1, 4}));
  auto [h2, c2] = cell.step(g, bp, x, h, c);
  // gates: sigmoid(0)=0.5, tanh(0)=0, so c' = 0.5*0 + 0.5*0 and h' = 0.5*tanh(0)
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(g.value(h2)[i] == 0.0);
    CHECK(g.value(c2)[i] == 0.0);
  }
}

TEST_CASE("gru step with all-zero parameters keeps a zero hidden state at zero") {
  Rng rng(1);
  NetworkParams p;
  GruCell cell(p, rng, 2, 3, "gru");
  for (std::size_t i = 0; i < p.count(); ++i) p.slot(static_cast<int>(i)).value.fill(0.0);
  Graph g;
  auto bp = cell.bind(g, p);
  Var h2 = cell.step(g, bp, g.input(Tensor({1, 2}, {5.0, -3.0})), g.input(Tensor::zeros({1, 3})));
  for (std::size_t i = 0; i < 3; ++i) CHECK(g.value(h2)[i] == 0.0);
}

TEST_CASE("bilstm output width is twice the hidden width") {
  Rng rng(5);
  NetworkParams p;
  LstmCell fwd(p, rng, 1, 16, "fwd");
  LstmCell rev(p, rng, 1, 16, "rev");
  Graph g;
  Var seq = g.input(dcast_test::random_tensor({2, 7, 1}, rng));
  Var h = run_bilstm(g, p, fwd, rev, seq);
  CHECK(g.value(h).shape() == std::vector<std::size_t>{2, 32});
}

TEST_CASE("recurrent width mismatch is a configuration error") {
  Rng rng(5);
  NetworkParams p;
  GruCell cell(p, rng, 2, 3, "gru");
  Graph g;
  Var seq = g.input(dcast_test::random_tensor({1, 4, 3}, rng));  // 3 channels, cell wants 2
  CHECK_THROWS_AS((void)run_gru(g, p, cell, seq), ConfigError);
}

TEST_CASE("gradients match central finite differences for every layer kind") {
  Rng rng(99);

  SUBCASE("linear stack") {
    NetworkParams p;
    Linear l1(p, rng, 5, 4, "l1");
    Linear l2(p, rng, 4, 2, "l2");
    Tensor x = dcast_test::random_tensor({3, 5}, rng);
    Tensor tgt = dcast_test::random_tensor({3, 2}, rng);
    auto loss = [&](bool bw) {
      Graph g;
      Var y = l2.forward(g, p, g.relu(l1.forward(g, p, g.input(x))));
      Var out = g.mse(y, g.input(tgt));
      if (bw) g.backward(out);
      return g.value(out)[0];
    };
    CHECK(dcast_test::max_grad_error(p, loss) < 1e-4);
  }

  SUBCASE("conv1d stack") {
    NetworkParams p;
    Conv1d c1(p, rng, 2, 3, 4, 1, "c1");
    Conv1d c2(p, rng, 3, 2, 3, 2, "c2");
    Tensor x = dcast_test::random_tensor({2, 12, 2}, rng);
    auto loss = [&](bool bw) {
      Graph g;
      Var y = c2.forward(g, p, g.relu(c1.forward(g, p, g.input(x))));
      Var out = g.mean_all(g.square(y));
      if (bw) g.backward(out);
      return g.value(out)[0];
    };
    CHECK(dcast_test::max_grad_error(p, loss) < 1e-4);
  }

  SUBCASE("lstm over a sequence") {
    NetworkParams p;
    LstmCell cell(p, rng, 2, 3, "lstm");
    Linear head(p, rng, 3, 1, "head");
    Tensor x = dcast_test::random_tensor({2, 5, 2}, rng);
    Tensor tgt = dcast_test::random_tensor({2, 1}, rng);
    auto loss = [&](bool bw) {
      Graph g;
      Var y = head.forward(g, p, run_lstm(g, p, cell, g.input(x)));
      Var out = g.mse(y, g.input(tgt));
      if (bw) g.backward(out);
      return g.value(out)[0];
    };
    CHECK(dcast_test::max_grad_error(p, loss) < 1e-4);
  }

  SUBCASE("gru over a sequence") {
    NetworkParams p;
    GruCell cell(p, rng, 2, 4, "gru");
    Linear head(p, rng, 4, 1, "head");
    Tensor x = dcast_test::random_tensor({2, 5, 2}, rng);
    Tensor tgt = dcast_test::random_tensor({2, 1}, rng);
    auto loss = [&](bool bw) {
      Graph g;
      Var y = head.forward(g, p, run_gru(g, p, cell, g.input(x)));
      Var out = g.mse(y, g.input(tgt));
      if (bw) g.backward(out);
      return g.value(out)[0];
    };
    CHECK(dcast_test::max_grad_error(p, loss) < 1e-4);
  }

  SUBCASE("bilstm wrapper") {
    NetworkParams p;
    LstmCell fwd(p, rng, 1, 3, "fwd");
    LstmCell rev(p, rng, 1, 3, "rev");
    Linear head(p, rng, 6, 1, "head");
    Tensor x = dcast_test::random_tensor({2, 6, 1}, rng);
    auto loss = [&](bool bw) {
      Graph g;
      Var y = head.forward(g, p, run_bilstm(g, p, fwd, rev, g.input(x)));
      Var out = g.mean_all(g.square(y));
      if (bw) g.backward(out);
      return g.value(out)[0];
    };
    CHECK(dcast_test::max_grad_error(p, loss) < 1e-4);
  }
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  Rng rng(3);
  NetworkParams p;
  p.add("w", dcast_test::random_tensor({3, 3}, rng));
  const Tensor before = p.slot(0).value;
  p.zero_grad();
  adam_step(p, 0.1);
  for (std::size_t i = 0; i < before.size(); ++i) CHECK(p.slot(0).value[i] == before[i]);
}

TEST_CASE("adam: unit gradient moves a scalar by about lr on the first step") {
  NetworkParams p;
  p.add("w", Tensor({1}, {1.0}));
  p.slot(0).grad[0] = 1.0;
  adam_step(p, 0.1);
  CHECK(p.slot(0).value[0] == doctest::Approx(0.9).epsilon(1e-6));
}

TEST_CASE("adam: consecutive identical gradients decrease the value monotonically") {
  NetworkParams p;
  p.add("w", Tensor({1}, {1.0}));
  double prev = p.slot(0).value[0];
  for (int i = 0; i < 2; ++i) {
    p.zero_grad();
    p.slot(0).grad[0] = 1.0;
    adam_step(p, 0.1);
    CHECK(p.slot(0).value[0] < prev);
    prev = p.slot(0).value[0];
  }
}

TEST_CASE("shape algebra: declared layer compositions never shape-fault at runtime") {
  Rng rng(1717);
  for (int trial = 0; trial < 25; ++trial) {
    Rng r = rng.fork(static_cast<std::uint64_t>(trial));
    const std::size_t len = 8 + r.uniform_int(30);
    const std::size_t ch = 1 + r.uniform_int(3);
    const std::size_t filters = 1 + r.uniform_int(6);
    const std::size_t kernel = 1 + r.uniform_int(len);  // construction-checked vs len below
    const std::size_t stride = 1 + r.uniform_int(2);
    const std::size_t hidden = 1 + r.uniform_int(8);
    NetworkParams p;
    Conv1d conv(p, r, ch, filters, kernel, stride, "conv");
    const std::size_t out_len = conv.out_len(len);  // throws if kernel > len, so guard:
    GruCell cell(p, r, filters, hidden, "gru");
    Linear head(p, r, hidden, 1, "head");
    Graph g;
    Var y = head.forward(g, p, run_gru(g, p, cell, conv.forward(g, p, g.input(dcast_test::random_tensor({2, len, ch}, r)))));
    CHECK(g.value(y).shape() == std::vector<std::size_t>{2, 1});
    CHECK(g.value(y).all_finite());
    (void)out_len;
  }
}
