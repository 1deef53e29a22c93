#include "dcast/layers.hpp"

#include <cmath>

#include "dcast/errors.hpp"

namespace dcast::nn {

Tensor glorot_uniform(std::vector<std::size_t> shape, std::size_t fan_in, std::size_t fan_out,
                      Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-limit, limit);
  return t;
}

Linear::Linear(NetworkParams& p, Rng& rng, std::size_t in, std::size_t out,
               const std::string& prefix)
    : in_(in), out_(out) {
  if (in == 0 || out == 0) throw ConfigError("linear: zero width in " + prefix);
  w_ = p.add(prefix + ".w", glorot_uniform({in, out}, in, out, rng));
  b_ = p.add(prefix + ".b", Tensor::zeros({out}));
}

Var Linear::forward(Graph& g, NetworkParams& p, Var x) const {
  if (g.value(x).rank() != 2 || g.value(x).dim(1) != in_)
    throw ConfigError("linear: input width " + g.value(x).shape_str() + " vs weight rows " +
                      std::to_string(in_));
  return g.add_bias(g.matmul(x, g.param(p, w_)), g.param(p, b_));
}

Conv1d::Conv1d(NetworkParams& p, Rng& rng, std::size_t in_ch, std::size_t filters,
               std::size_t kernel, std::size_t stride, const std::string& prefix)
    : in_ch_(in_ch), filters_(filters), kernel_(kernel), stride_(stride) {
  if (in_ch == 0 || filters == 0 || kernel == 0) throw ConfigError("conv1d: zero dim in " + prefix);
  if (stride == 0) throw ConfigError("conv1d: stride must be >= 1 in " + prefix);
  w_ = p.add(prefix + ".w", glorot_uniform({filters, kernel, in_ch}, kernel * in_ch, filters, rng));
  b_ = p.add(prefix + ".b", Tensor::zeros({filters}));
}

std::size_t Conv1d::out_len(std::size_t in_len) const {
  if (kernel_ > in_len)
    throw ConfigError("conv1d: kernel " + std::to_string(kernel_) + " exceeds input length " +
                      std::to_string(in_len));
  return (in_len - kernel_) / stride_ + 1;
}

Var Conv1d::forward(Graph& g, NetworkParams& p, Var x) const {
  return g.conv1d(x, g.param(p, w_), g.param(p, b_), stride_);
}

LstmCell::LstmCell(NetworkParams& p, Rng& rng, std::size_t in, std::size_t hidden,
                   const std::string& prefix)
    : in_(in), hidden_(hidden) {
  if (in == 0 || hidden == 0) throw ConfigError("lstm: zero width in " + prefix);
  wx_ = p.add(prefix + ".wx", glorot_uniform({in, 4 * hidden}, in, hidden, rng));
  wh_ = p.add(prefix + ".wh", glorot_uniform({hidden, 4 * hidden}, hidden, hidden, rng));
  b_ = p.add(prefix + ".b", Tensor::zeros({4 * hidden}));
}

LstmCell::Bound LstmCell::bind(Graph& g, NetworkParams& p) const {
  return Bound{g.param(p, wx_), g.param(p, wh_), g.param(p, b_)};
}

std::pair<Var, Var> LstmCell::step(Graph& g, const Bound& bp, Var x, Var h, Var c) const {
  const std::size_t H = hidden_;
  Var z = g.add_bias(g.add(g.matmul(x, bp.wx), g.matmul(h, bp.wh)), bp.b);
  Var i = g.sigmoid(g.slice_cols(z, 0, H));
  Var f = g.sigmoid(g.slice_cols(z, H, 2 * H));
  Var gg = g.tanh(g.slice_cols(z, 2 * H, 3 * H));
  Var o = g.sigmoid(g.slice_cols(z, 3 * H, 4 * H));
  Var c_next = g.add(g.mul(f, c), g.mul(i, gg));
  Var h_next = g.mul(o, g.tanh(c_next));
  return {h_next, c_next};
}

GruCell::GruCell(NetworkParams& p, Rng& rng, std::size_t in, std::size_t hidden,
                 const std::string& prefix)
    : in_(in), hidden_(hidden) {
  if (in == 0 || hidden == 0) throw ConfigError("gru: zero width in " + prefix);
  wx_ = p.add(prefix + ".wx", glorot_uniform({in, 3 * hidden}, in, hidden, rng));
  wh_ = p.add(prefix + ".wh", glorot_uniform({hidden, 3 * hidden}, hidden, hidden, rng));
  bx_ = p.add(prefix + ".bx", Tensor::zeros({3 * hidden}));
  bh_ = p.add(prefix + ".bh", Tensor::zeros({3 * hidden}));
}

GruCell::Bound GruCell::bind(Graph& g, NetworkParams& p) const {
  return Bound{g.param(p, wx_), g.param(p, wh_), g.param(p, bx_), g.param(p, bh_)};
}

Var GruCell::step(Graph& g, const Bound& bp, Var x, Var h) const {
  const std::size_t H = hidden_;
  Var gx = g.add_bias(g.matmul(x, bp.wx), bp.bx);
  Var gh = g.add_bias(g.matmul(h, bp.wh), bp.bh);
  Var z = g.sigmoid(g.add(g.slice_cols(gx, 0, H), g.slice_cols(gh, 0, H)));
  Var r = g.sigmoid(g.add(g.slice_cols(gx, H, 2 * H), g.slice_cols(gh, H, 2 * H)));
  Var n = g.tanh(
      g.add(g.slice_cols(gx, 2 * H, 3 * H), g.mul(r, g.slice_cols(gh, 2 * H, 3 * H))));
  // h' = (1-z)*n + z*h
  Var one_minus_z = g.affine(z, -1.0, 1.0);
  return g.add(g.mul(one_minus_z, n), g.mul(z, h));
}

namespace {

Var zero_state(Graph& g, std::size_t batch, std::size_t hidden) {
  return g.input(Tensor::zeros({batch, hidden}));
}

}  // namespace

Var run_lstm(Graph& g, NetworkParams& p, const LstmCell& cell, Var seq, bool reverse) {
  const Tensor& ts = g.value(seq);
  if (ts.rank() != 3 || ts.dim(2) != cell.in_width())
    throw ConfigError("run_lstm: want [B,L," + std::to_string(cell.in_width()) + "], got " +
                      ts.shape_str());
  const std::size_t batch = ts.dim(0), len = ts.dim(1);
  auto bp = cell.bind(g, p);
  Var h = zero_state(g, batch, cell.hidden());
  Var c = zero_state(g, batch, cell.hidden());
  for (std::size_t s = 0; s < len; ++s) {
    const std::size_t t = reverse ? len - 1 - s : s;
    auto [h2, c2] = cell.step(g, bp, g.time_slice(seq, t), h, c);
    h = h2;
    c = c2;
  }
  return h;
}

Var run_gru(Graph& g, NetworkParams& p, const GruCell& cell, Var seq, bool reverse) {
  const Tensor& ts = g.value(seq);
  if (ts.rank() != 3 || ts.dim(2) != cell.in_width())
    throw ConfigError("run_gru: want [B,L," + std::to_string(cell.in_width()) + "], got " +
                      ts.shape_str());
  const std::size_t batch = ts.dim(0), len = ts.dim(1);
  auto bp = cell.bind(g, p);
  Var h = zero_state(g, batch, cell.hidden());
  for (std::size_t s = 0; s < len; ++s) {
    const std::size_t t = reverse ? len - 1 - s : s;
    h = cell.step(g, bp, g.time_slice(seq, t), h);
  }
  return h;
}

Var run_bilstm(Graph& g, NetworkParams& p, const LstmCell& fwd, const LstmCell& rev, Var seq) {
  return g.concat_cols(run_lstm(g, p, fwd, seq, false), run_lstm(g, p, rev, seq, true));
}

}  // namespace dcast::nn
