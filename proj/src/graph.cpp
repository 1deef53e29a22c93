#include "dcast/graph.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "dcast/errors.hpp"
#include "dcast/kernels.hpp"

namespace dcast::nn {

void Graph::check(Var v, const char* op) const {
  if (!v.valid() || v.id >= nodes_.size())
    throw std::logic_error(std::string(op) + ": var does not belong to this graph");
}

Var Graph::emit(const char* op, Tensor value, std::function<void(Graph&, const Tensor&)> back) {
  if (!value.all_finite())
    throw NumericError(std::string("non-finite value produced by ") + op);
  Node n;
  n.value = std::move(value);
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Graph::input(Tensor value) { return emit("input", std::move(value), nullptr); }

Var Graph::param(NetworkParams& params, int slot_index) {
  Var v = emit("param", params.slot(slot_index).value, nullptr);
  nodes_[v.id].sink = &params;
  nodes_[v.id].sink_slot = slot_index;
  return v;
}

Var Graph::matmul(Var a, Var b) {
  check(a, "matmul");
  check(b, "matmul");
  const Tensor& ta = val(a.id);
  const Tensor& tb = val(b.id);
  if (ta.rank() != 2 || tb.rank() != 2 || ta.dim(1) != tb.dim(0))
    throw ConfigError("matmul: incompatible shapes " + ta.shape_str() + " x " + tb.shape_str());
  const std::size_t m = ta.dim(0), k = ta.dim(1), n = tb.dim(1);
  Tensor out({m, n});
  kernels::matmul(ta.data(), tb.data(), out.data(), m, k, n, false, false, false);
  auto back = [a, b, m, k, n](Graph& g, const Tensor& dy) {
    // dA += dY·Bt, dB += At·dY
    kernels::matmul(dy.data(), g.val(b.id).data(), g.grad_buf(a.id).data(), m, n, k, false, true,
                    true);
    kernels::matmul(g.val(a.id).data(), dy.data(), g.grad_buf(b.id).data(), k, m, n, true, false,
                    true);
  };
  return emit("matmul", std::move(out), back);
}

Var Graph::add_bias(Var m, Var bias) {
  check(m, "add_bias");
  check(bias, "add_bias");
  const Tensor& tm = val(m.id);
  const Tensor& tb = val(bias.id);
  if (tm.rank() != 2 || tb.rank() != 1 || tm.dim(1) != tb.dim(0))
    throw ConfigError("add_bias: " + tm.shape_str() + " + " + tb.shape_str());
  Tensor out = tm;
  const std::size_t rows = tm.dim(0), cols = tm.dim(1);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) out.at(i, j) += tb[j];
  auto back = [m, bias, rows, cols](Graph& g, const Tensor& dy) {
    Tensor& dm = g.grad_buf(m.id);
    Tensor& db = g.grad_buf(bias.id);
    for (std::size_t i = 0; i < rows * cols; ++i) dm[i] += dy[i];
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) db[j] += dy.at(i, j);
  };
  return emit("add_bias", std::move(out), back);
}

Var Graph::add(Var a, Var b) {
  check(a, "add");
  check(b, "add");
  const Tensor& ta = val(a.id);
  const Tensor& tb = val(b.id);
  if (!ta.same_shape(tb))
    throw ConfigError("add: shape mismatch " + ta.shape_str() + " vs " + tb.shape_str());
  Tensor out = ta;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += tb[i];
  auto back = [a, b](Graph& g, const Tensor& dy) {
    Tensor& da = g.grad_buf(a.id);
    Tensor& db = g.grad_buf(b.id);
    for (std::size_t i = 0; i < dy.size(); ++i) {
      da[i] += dy[i];
      db[i] += dy[i];
    }
  };
  return emit("add", std::move(out), back);
}

Var Graph::sub(Var a, Var b) {
  check(a, "sub");
  check(b, "sub");
  const Tensor& ta = val(a.id);
  const Tensor& tb = val(b.id);
  if (!ta.same_shape(tb))
    throw ConfigError("sub: shape mismatch " + ta.shape_str() + " vs " + tb.shape_str());
  Tensor out = ta;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= tb[i];
  auto back = [a, b](Graph& g, const Tensor& dy) {
    Tensor& da = g.grad_buf(a.id);
    Tensor& db = g.grad_buf(b.id);
    for (std::size_t i = 0; i < dy.size(); ++i) {
      da[i] += dy[i];
      db[i] -= dy[i];
    }
  };
  return emit("sub", std::move(out), back);
}

Var Graph::mul(Var a, Var b) {
  check(a, "mul");
  check(b, "mul");
  const Tensor& ta = val(a.id);
  const Tensor& tb = val(b.id);
  if (!ta.same_shape(tb))
    throw ConfigError("mul: shape mismatch " + ta.shape_str() + " vs " + tb.shape_str());
  Tensor out = ta;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= tb[i];
  auto back = [a, b](Graph& g, const Tensor& dy) {
    const Tensor& va = g.val(a.id);
    const Tensor& vb = g.val(b.id);
    Tensor& da = g.grad_buf(a.id);
    Tensor& db = g.grad_buf(b.id);
    for (std::size_t i = 0; i < dy.size(); ++i) {
      da[i] += dy[i] * vb[i];
      db[i] += dy[i] * va[i];
    }
  };
  return emit("mul", std::move(out), back);
}

Var Graph::affine(Var a, double scale, double shift) {
  check(a, "affine");
  Tensor out = val(a.id);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = scale * out[i] + shift;
  auto back = [a, scale](Graph& g, const Tensor& dy) {
    Tensor& da = g.grad_buf(a.id);
    for (std::size_t i = 0; i < dy.size(); ++i) da[i] += scale * dy[i];
  };
  return emit("affine", std::move(out), back);
}

Var Graph::sigmoid(Var a) {
  check(a, "sigmoid");
  Tensor out = val(a.id);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-out[i]));
  // The closure wants the output node's own id, which exists only after emit.
  Var v = emit("sigmoid", std::move(out), nullptr);
  nodes_[v.id].back = [a, v](Graph& g, const Tensor& dy) {
    const Tensor& s = g.val(v.id);
    Tensor& da = g.grad_buf(a.id);
    for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i] * s[i] * (1.0 - s[i]);
  };
  return v;
}

Var Graph::tanh(Var a) {
  check(a, "tanh");
  Tensor out = val(a.id);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(out[i]);
  Var v = emit("tanh", std::move(out), nullptr);
  nodes_[v.id].back = [a, v](Graph& g, const Tensor& dy) {
    const Tensor& t = g.val(v.id);
    Tensor& da = g.grad_buf(a.id);
    for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i] * (1.0 - t[i] * t[i]);
  };
  return v;
}

Var Graph::relu(Var a) {
  check(a, "relu");
  Tensor out = val(a.id);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = out[i] > 0.0 ? out[i] : 0.0;
  auto back = [a](Graph& g, const Tensor& dy) {
    const Tensor& x = g.val(a.id);
    Tensor& da = g.grad_buf(a.id);
    for (std::size_t i = 0; i < dy.size(); ++i)
      if (x[i] > 0.0) da[i] += dy[i];
  };
  return emit("relu", std::move(out), back);
}

Var Graph::square(Var a) {
  check(a, "square");
  Tensor out = val(a.id);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= out[i];
  auto back = [a](Graph& g, const Tensor& dy) {
    const Tensor& x = g.val(a.id);
    Tensor& da = g.grad_buf(a.id);
    for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i] * 2.0 * x[i];
  };
  return emit("square", std::move(out), back);
}

Var Graph::slice_cols(Var a, std::size_t c0, std::size_t c1) {
  check(a, "slice_cols");
  const Tensor& ta = val(a.id);
  if (ta.rank() != 2 || c0 >= c1 || c1 > ta.dim(1))
    throw ConfigError("slice_cols: bad range on " + ta.shape_str());
  const std::size_t rows = ta.dim(0), cols = ta.dim(1), w = c1 - c0;
  Tensor out({rows, w});
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < w; ++j) out.at(i, j) = ta.at(i, c0 + j);
  auto back = [a, rows, cols, c0, w](Graph& g, const Tensor& dy) {
    (void)cols;
    Tensor& da = g.grad_buf(a.id);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < w; ++j) da.at(i, c0 + j) += dy.at(i, j);
  };
  return emit("slice_cols", std::move(out), back);
}

Var Graph::concat_cols(Var a, Var b) {
  check(a, "concat_cols");
  check(b, "concat_cols");
  const Tensor& ta = val(a.id);
  const Tensor& tb = val(b.id);
  if (ta.rank() != 2 || tb.rank() != 2 || ta.dim(0) != tb.dim(0))
    throw ConfigError("concat_cols: " + ta.shape_str() + " | " + tb.shape_str());
  const std::size_t rows = ta.dim(0), ca = ta.dim(1), cb = tb.dim(1);
  Tensor out({rows, ca + cb});
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < ca; ++j) out.at(i, j) = ta.at(i, j);
    for (std::size_t j = 0; j < cb; ++j) out.at(i, ca + j) = tb.at(i, j);
  }
  auto back = [a, b, rows, ca, cb](Graph& g, const Tensor& dy) {
    Tensor& da = g.grad_buf(a.id);
    Tensor& db = g.grad_buf(b.id);
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < ca; ++j) da.at(i, j) += dy.at(i, j);
      for (std::size_t j = 0; j < cb; ++j) db.at(i, j) += dy.at(i, ca + j);
    }
  };
  return emit("concat_cols", std::move(out), back);
}

Var Graph::time_slice(Var seq, std::size_t t) {
  check(seq, "time_slice");
  const Tensor& ts = val(seq.id);
  if (ts.rank() != 3 || t >= ts.dim(1))
    throw ConfigError("time_slice: index " + std::to_string(t) + " on " + ts.shape_str());
  const std::size_t batch = ts.dim(0), len = ts.dim(1), ch = ts.dim(2);
  Tensor out({batch, ch});
  for (std::size_t b = 0; b < batch; ++b)
    for (std::size_t c = 0; c < ch; ++c) out.at(b, c) = ts.at(b, t, c);
  auto back = [seq, t, batch, len, ch](Graph& g, const Tensor& dy) {
    (void)len;
    Tensor& ds = g.grad_buf(seq.id);
    for (std::size_t b = 0; b < batch; ++b)
      for (std::size_t c = 0; c < ch; ++c) ds.at(b, t, c) += dy.at(b, c);
  };
  return emit("time_slice", std::move(out), back);
}

Var Graph::reshape(Var a, std::vector<std::size_t> shape) {
  check(a, "reshape");
  const Tensor& ta = val(a.id);
  if (Tensor::count(shape) != ta.size())
    throw ConfigError("reshape: element count mismatch on " + ta.shape_str());
  Tensor out(std::move(shape));
  for (std::size_t i = 0; i < ta.size(); ++i) out[i] = ta[i];
  auto back = [a](Graph& g, const Tensor& dy) {
    Tensor& da = g.grad_buf(a.id);
    for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i];
  };
  return emit("reshape", std::move(out), back);
}

Var Graph::conv1d(Var x, Var w, Var bias, std::size_t stride) {
  check(x, "conv1d");
  check(w, "conv1d");
  check(bias, "conv1d");
  const Tensor& tx = val(x.id);
  const Tensor& tw = val(w.id);
  const Tensor& tb = val(bias.id);
  if (tx.rank() != 3 || tw.rank() != 3)
    throw ConfigError("conv1d: want x[B,L,C], w[F,K,C], got " + tx.shape_str() + ", " +
                      tw.shape_str());
  const std::size_t batch = tx.dim(0), len = tx.dim(1), ch = tx.dim(2);
  const std::size_t filters = tw.dim(0), k = tw.dim(1);
  if (tw.dim(2) != ch) throw ConfigError("conv1d: channel mismatch");
  if (k > len)
    throw ConfigError("conv1d: kernel length " + std::to_string(k) + " exceeds input length " +
                      std::to_string(len));
  if (stride < 1) throw ConfigError("conv1d: stride must be >= 1");
  if (tb.rank() != 1 || tb.dim(0) != filters) throw ConfigError("conv1d: bad bias shape");
  const std::size_t out_len = (len - k) / stride + 1;
  Tensor out({batch, out_len, filters});
  kernels::conv1d_forward(tx.data(), tw.data(), tb.data(), out.data(), batch, len, ch, filters, k,
                          stride);
  auto back = [x, w, bias, batch, len, ch, filters, k, stride](Graph& g, const Tensor& dy) {
    kernels::conv1d_backward_input(dy.data(), g.val(w.id).data(), g.grad_buf(x.id).data(), batch,
                                   len, ch, filters, k, stride);
    kernels::conv1d_backward_kernels(dy.data(), g.val(x.id).data(), g.grad_buf(w.id).data(),
                                     g.grad_buf(bias.id).data(), batch, len, ch, filters, k,
                                     stride);
  };
  return emit("conv1d", std::move(out), back);
}

Var Graph::select_actions(Var q, const std::vector<int>& actions) {
  check(q, "select_actions");
  const Tensor& tq = val(q.id);
  if (tq.rank() != 2 || actions.size() != tq.dim(0))
    throw ConfigError("select_actions: want [B,A] with B action indices");
  const std::size_t rows = tq.dim(0);
  const std::size_t acts = tq.dim(1);
  Tensor out({rows, 1});
  for (std::size_t i = 0; i < rows; ++i) {
    const int a = actions[i];
    if (a < 0 || static_cast<std::size_t>(a) >= acts)
      throw ConfigError("select_actions: action index out of range");
    out.at(i, 0) = tq.at(i, static_cast<std::size_t>(a));
  }
  auto back = [q, actions, rows](Graph& g, const Tensor& dy) {
    Tensor& dq = g.grad_buf(q.id);
    for (std::size_t i = 0; i < rows; ++i)
      dq.at(i, static_cast<std::size_t>(actions[i])) += dy.at(i, 0);
  };
  return emit("select_actions", std::move(out), back);
}

Var Graph::mean_all(Var a) {
  check(a, "mean_all");
  const Tensor& ta = val(a.id);
  if (ta.size() == 0) throw ConfigError("mean_all: empty tensor");
  double acc = 0.0;
  for (std::size_t i = 0; i < ta.size(); ++i) acc += ta[i];
  const double inv_n = 1.0 / static_cast<double>(ta.size());
  Tensor out = Tensor::scalar(acc * inv_n);
  auto back = [a, inv_n](Graph& g, const Tensor& dy) {
    Tensor& da = g.grad_buf(a.id);
    const double g0 = dy[0] * inv_n;
    for (std::size_t i = 0; i < da.size(); ++i) da[i] += g0;
  };
  return emit("mean_all", std::move(out), back);
}

Var Graph::mse(Var pred, Var target) { return mean_all(square(sub(pred, target))); }

void Graph::backward(Var loss) {
  if (nodes_.empty()) throw std::logic_error("backward: no forward pass recorded");
  check(loss, "backward");
  if (val(loss.id).size() != 1) throw ConfigError("backward: loss must be scalar");
  for (auto& n : nodes_) {
    n.grad = Tensor::zeros(n.value.shape());
  }
  nodes_[loss.id].grad[0] = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.back) n.back(*this, n.grad);
    if (n.sink) {
      Tensor& sink_grad = n.sink->slot(n.sink_slot).grad;
      for (std::size_t j = 0; j < sink_grad.size(); ++j) sink_grad[j] += n.grad[j];
    }
  }
}

}  // namespace dcast::nn
