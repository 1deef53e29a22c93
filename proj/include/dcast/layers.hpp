#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "dcast/graph.hpp"
#include "dcast/params.hpp"
#include "dcast/rng.hpp"
#include "dcast/tensor.hpp"

namespace dcast::nn {

/// Uniform in +-sqrt(6/(fan_in+fan_out)).
Tensor glorot_uniform(std::vector<std::size_t> shape, std::size_t fan_in, std::size_t fan_out,
                      Rng& rng);

/// y = x·W + b. Registers its slots on construction; forward() binds them to
/// the given graph. All layers here hold slot indices only, so networks can
/// be copied by copying their NetworkParams.
class Linear {
 public:
  Linear() = default;
  Linear(NetworkParams& p, Rng& rng, std::size_t in, std::size_t out, const std::string& prefix);

  Var forward(Graph& g, NetworkParams& p, Var x) const;

  std::size_t in_width() const { return in_; }
  std::size_t out_width() const { return out_; }

 private:
  int w_ = -1, b_ = -1;
  std::size_t in_ = 0, out_ = 0;
};

/// Valid cross-correlation over [B, L, C] input.
class Conv1d {
 public:
  Conv1d() = default;
  Conv1d(NetworkParams& p, Rng& rng, std::size_t in_ch, std::size_t filters, std::size_t kernel,
         std::size_t stride, const std::string& prefix);

  Var forward(Graph& g, NetworkParams& p, Var x) const;

  std::size_t out_len(std::size_t in_len) const;
  std::size_t filters() const { return filters_; }
  std::size_t kernel() const { return kernel_; }

 private:
  int w_ = -1, b_ = -1;
  std::size_t in_ch_ = 0, filters_ = 0, kernel_ = 0, stride_ = 1;
};

/// Packed-gate LSTM cell: gates [i f g o] share one x-projection and one
/// h-projection of width 4*hidden.
class LstmCell {
 public:
  LstmCell() = default;
  LstmCell(NetworkParams& p, Rng& rng, std::size_t in, std::size_t hidden,
           const std::string& prefix);

  struct Bound {
    Var wx, wh, b;
  };
  Bound bind(Graph& g, NetworkParams& p) const;

  /// One step: returns (h', c').
  std::pair<Var, Var> step(Graph& g, const Bound& bp, Var x, Var h, Var c) const;

  std::size_t hidden() const { return hidden_; }
  std::size_t in_width() const { return in_; }

 private:
  int wx_ = -1, wh_ = -1, b_ = -1;
  std::size_t in_ = 0, hidden_ = 0;
};

/// Packed-gate GRU cell, gates [z r n]; the reset gate is applied to the
/// hidden projection of the candidate.
class GruCell {
 public:
  GruCell() = default;
  GruCell(NetworkParams& p, Rng& rng, std::size_t in, std::size_t hidden,
          const std::string& prefix);

  struct Bound {
    Var wx, wh, bx, bh;
  };
  Bound bind(Graph& g, NetworkParams& p) const;

  Var step(Graph& g, const Bound& bp, Var x, Var h) const;

  std::size_t hidden() const { return hidden_; }
  std::size_t in_width() const { return in_; }

 private:
  int wx_ = -1, wh_ = -1, bx_ = -1, bh_ = -1;
  std::size_t in_ = 0, hidden_ = 0;
};

/// Runs an LSTM over a [B, L, C] sequence, zero initial state. Returns the
/// final hidden state [B, hidden]. reverse=true consumes the sequence
/// back-to-front (the second half of a BiLSTM).
Var run_lstm(Graph& g, NetworkParams& p, const LstmCell& cell, Var seq, bool reverse = false);

/// Same for GRU.
Var run_gru(Graph& g, NetworkParams& p, const GruCell& cell, Var seq, bool reverse = false);

/// Forward and reversed LSTM passes concatenated: [B, 2*hidden].
Var run_bilstm(Graph& g, NetworkParams& p, const LstmCell& fwd, const LstmCell& rev, Var seq);

}  // namespace dcast::nn
