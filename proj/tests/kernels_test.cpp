#include "doctest.h"

#include <vector>

#include "dcast/kernels.hpp"
#include "dcast/rng.hpp"

using namespace dcast;
namespace k = dcast::nn::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

}  // namespace

TEST_CASE("matmul parallel kernels match the serial reference bitwise") {
  Rng rng(7);
  const std::size_t sizes[][3] = {{1, 1, 1}, {3, 4, 5}, {17, 9, 23}, {64, 41, 96}, {33, 128, 6}};
  for (auto [m, kk, n] : sizes) {
    for (int mode = 0; mode < 3; ++mode) {
      const bool ta = mode == 2, tb = mode == 1;
      auto a = random_vec(m * kk, rng);
      auto b = random_vec(kk * n, rng);
      auto c0 = random_vec(m * n, rng);
      for (bool acc : {false, true}) {
        auto x0 = c0, x1 = c0;
        k::matmul(a.data(), b.data(), x0.data(), m, kk, n, ta, tb, acc);
        k::serial::matmul(a.data(), b.data(), x1.data(), m, kk, n, ta, tb, acc);
        CHECK(x0 == x1);
      }
    }
  }
}

TEST_CASE("conv1d kernels match the serial reference bitwise") {
  Rng rng(11);
  struct Cfg {
    std::size_t batch, len, ch, filters, kernel, stride;
  };
  for (const auto& c : {Cfg{1, 8, 1, 3, 3, 1}, Cfg{4, 41, 1, 8, 5, 1}, Cfg{2, 20, 3, 5, 4, 2},
                        Cfg{3, 35, 16, 16, 3, 1}}) {
    const std::size_t out_len = (c.len - c.kernel) / c.stride + 1;
    auto x = random_vec(c.batch * c.len * c.ch, rng);
    auto w = random_vec(c.filters * c.kernel * c.ch, rng);
    auto bias = random_vec(c.filters, rng);
    std::vector<double> y0(c.batch * out_len * c.filters), y1 = y0;
    k::conv1d_forward(x.data(), w.data(), bias.data(), y0.data(), c.batch, c.len, c.ch, c.filters,
                      c.kernel, c.stride);
    k::serial::conv1d_forward(x.data(), w.data(), bias.data(), y1.data(), c.batch, c.len, c.ch,
                              c.filters, c.kernel, c.stride);
    CHECK(y0 == y1);

    auto dy = random_vec(c.batch * out_len * c.filters, rng);
    auto dx0 = random_vec(x.size(), rng);
    auto dx1 = dx0;
    k::conv1d_backward_input(dy.data(), w.data(), dx0.data(), c.batch, c.len, c.ch, c.filters,
                             c.kernel, c.stride);
    k::serial::conv1d_backward_input(dy.data(), w.data(), dx1.data(), c.batch, c.len, c.ch,
                                     c.filters, c.kernel, c.stride);
    CHECK(dx0 == dx1);

    auto dw0 = random_vec(w.size(), rng);
    auto dw1 = dw0;
    std::vector<double> db0(c.filters, 0.5), db1 = db0;
    k::conv1d_backward_kernels(dy.data(), x.data(), dw0.data(), db0.data(), c.batch, c.len, c.ch,
                               c.filters, c.kernel, c.stride);
    k::serial::conv1d_backward_kernels(dy.data(), x.data(), dw1.data(), db1.data(), c.batch, c.len,
                                       c.ch, c.filters, c.kernel, c.stride);
    CHECK(dw0 == dw1);
    CHECK(db0 == db1);
  }
}
