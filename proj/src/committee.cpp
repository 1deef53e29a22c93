#include "dcast/committee.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>

#include "dcast/errors.hpp"
#include "dcast/graph.hpp"
#include "dcast/serialize.hpp"

namespace dcast::committee {

const char* kind_name(ForecasterKind kind) {
  switch (kind) {
    case ForecasterKind::Ffnn: return "ffnn";
    case ForecasterKind::Lstm: return "lstm";
    case ForecasterKind::Gru: return "gru";
    case ForecasterKind::BiLstm: return "bilstm";
    case ForecasterKind::Cnn: return "cnn";
    case ForecasterKind::CnnLstm: return "cnn_lstm";
  }
  return "?";
}

ForecasterKind kind_from_name(const std::string& name) {
  for (auto k : kAllKinds)
    if (name == kind_name(k)) return k;
  throw ConfigError("unknown forecaster kind '" + name + "'");
}

std::string ForecasterArch::descriptor(ForecasterKind kind, std::size_t window) const {
  std::string d = std::string("v1:") + kind_name(kind) + ":w" + std::to_string(window) + ":";
  switch (kind) {
    case ForecasterKind::Ffnn:
      for (auto h : ffnn_hidden) d += "d" + std::to_string(h);
      break;
    case ForecasterKind::Lstm:
    case ForecasterKind::Gru:
    case ForecasterKind::BiLstm:
      d += "h" + std::to_string(rnn_hidden);
      break;
    case ForecasterKind::Cnn:
      for (const auto& c : cnn_conv)
        d += "c" + std::to_string(c.filters) + "k" + std::to_string(c.kernel) + "s" +
             std::to_string(c.stride);
      d += "d" + std::to_string(cnn_dense);
      break;
    case ForecasterKind::CnnLstm:
      for (const auto& c : cnn_lstm_conv)
        d += "c" + std::to_string(c.filters) + "k" + std::to_string(c.kernel) + "s" +
             std::to_string(c.stride);
      d += "h" + std::to_string(cnn_lstm_hidden);
      break;
  }
  return d;
}

Forecaster Forecaster::build(ForecasterKind kind, std::size_t window, const ForecasterArch& arch,
                             Rng& rng) {
  if (window == 0) throw ConfigError("forecaster: window must be positive");
  Forecaster f;
  f.kind_ = kind;
  f.window_ = window;
  f.fingerprint_ = dcast::fingerprint(arch.descriptor(kind, window));
  auto& p = f.params_;
  switch (kind) {
    case ForecasterKind::Ffnn: {
      std::size_t in = window;
      for (std::size_t i = 0; i < arch.ffnn_hidden.size(); ++i) {
        f.dense_.emplace_back(p, rng, in, arch.ffnn_hidden[i], "ffnn.d" + std::to_string(i));
        in = arch.ffnn_hidden[i];
      }
      f.head_ = nn::Linear(p, rng, in, 1, "ffnn.out");
      break;
    }
    case ForecasterKind::Lstm:
      f.lstm_ = nn::LstmCell(p, rng, 1, arch.rnn_hidden, "lstm");
      f.head_ = nn::Linear(p, rng, arch.rnn_hidden, 1, "lstm.out");
      break;
    case ForecasterKind::Gru:
      f.gru_ = nn::GruCell(p, rng, 1, arch.rnn_hidden, "gru");
      f.head_ = nn::Linear(p, rng, arch.rnn_hidden, 1, "gru.out");
      break;
    case ForecasterKind::BiLstm:
      f.lstm_ = nn::LstmCell(p, rng, 1, arch.rnn_hidden, "bilstm.fwd");
      f.lstm_rev_ = nn::LstmCell(p, rng, 1, arch.rnn_hidden, "bilstm.rev");
      f.head_ = nn::Linear(p, rng, 2 * arch.rnn_hidden, 1, "bilstm.out");
      break;
    case ForecasterKind::Cnn: {
      std::size_t ch = 1, len = window;
      for (std::size_t i = 0; i < arch.cnn_conv.size(); ++i) {
        const auto& c = arch.cnn_conv[i];
        f.convs_.emplace_back(p, rng, ch, c.filters, c.kernel, c.stride,
                              "cnn.c" + std::to_string(i));
        len = f.convs_.back().out_len(len);  // throws if the kernel no longer fits
        ch = c.filters;
      }
      f.dense_.emplace_back(p, rng, len * ch, arch.cnn_dense, "cnn.dense");
      f.head_ = nn::Linear(p, rng, arch.cnn_dense, 1, "cnn.out");
      break;
    }
    case ForecasterKind::CnnLstm: {
      std::size_t ch = 1, len = window;
      for (std::size_t i = 0; i < arch.cnn_lstm_conv.size(); ++i) {
        const auto& c = arch.cnn_lstm_conv[i];
        f.convs_.emplace_back(p, rng, ch, c.filters, c.kernel, c.stride,
                              "cnn_lstm.c" + std::to_string(i));
        len = f.convs_.back().out_len(len);
        ch = c.filters;
      }
      f.lstm_ = nn::LstmCell(p, rng, ch, arch.cnn_lstm_hidden, "cnn_lstm.rnn");
      f.head_ = nn::Linear(p, rng, arch.cnn_lstm_hidden, 1, "cnn_lstm.out");
      break;
    }
  }
  return f;
}

nn::Var Forecaster::forward(nn::Graph& g, const nn::Tensor& windows) const {
  if (windows.rank() != 2 || windows.dim(1) != window_)
    throw ConfigError(std::string("forecaster ") + kind_name(kind_) + ": want [B," +
                      std::to_string(window_) + "], got " + windows.shape_str());
  const std::size_t batch = windows.dim(0);
  nn::Var x = g.input(windows);
  switch (kind_) {
    case ForecasterKind::Ffnn: {
      nn::Var h = x;
      for (const auto& l : dense_) h = g.relu(l.forward(g, params_, h));
      return head_.forward(g, params_, h);
    }
    case ForecasterKind::Lstm: {
      nn::Var seq = g.reshape(x, {batch, window_, 1});
      return head_.forward(g, params_, nn::run_lstm(g, params_, lstm_, seq));
    }
    case ForecasterKind::Gru: {
      nn::Var seq = g.reshape(x, {batch, window_, 1});
      return head_.forward(g, params_, nn::run_gru(g, params_, gru_, seq));
    }
    case ForecasterKind::BiLstm: {
      nn::Var seq = g.reshape(x, {batch, window_, 1});
      return head_.forward(g, params_, nn::run_bilstm(g, params_, lstm_, lstm_rev_, seq));
    }
    case ForecasterKind::Cnn: {
      nn::Var h = g.reshape(x, {batch, window_, 1});
      for (const auto& c : convs_) h = g.relu(c.forward(g, params_, h));
      const auto& s = g.value(h).shape();
      nn::Var flat = g.reshape(h, {batch, s[1] * s[2]});
      return head_.forward(g, params_, g.relu(dense_[0].forward(g, params_, flat)));
    }
    case ForecasterKind::CnnLstm: {
      nn::Var h = g.reshape(x, {batch, window_, 1});
      for (const auto& c : convs_) h = g.relu(c.forward(g, params_, h));
      return head_.forward(g, params_, nn::run_lstm(g, params_, lstm_, h));
    }
  }
  throw ConfigError("forecaster: unreachable kind");
}

double Forecaster::predict_one(const std::vector<double>& window) const {
  if (window.size() != window_)
    throw ConfigError("predict_one: window length " + std::to_string(window.size()) + " vs " +
                      std::to_string(window_));
  nn::Graph g;
  nn::Tensor x({1, window_});
  for (std::size_t i = 0; i < window_; ++i) x[i] = window[i];
  return g.value(forward(g, x))[0];
}

namespace {

double eval_mse(const Forecaster& model, const std::vector<data::WindowSample>& samples) {
  if (samples.empty()) return 0.0;
  double acc = 0.0;
  const std::size_t chunk = 256;
  for (std::size_t from = 0; from < samples.size(); from += chunk) {
    const std::size_t to = std::min(from + chunk, samples.size());
    nn::Tensor x({to - from, model.window()});
    for (std::size_t i = from; i < to; ++i)
      for (std::size_t j = 0; j < model.window(); ++j)
        x.at(i - from, j) = samples[i].window[j];
    nn::Graph g;
    const nn::Tensor& pred = g.value(model.forward(g, x));
    for (std::size_t i = from; i < to; ++i) {
      const double e = pred[i - from] - samples[i].target;
      acc += e * e;
    }
  }
  return acc / static_cast<double>(samples.size());
}

void train_epoch(Forecaster& model, const std::vector<data::WindowSample>& samples,
                 std::vector<std::size_t>& idx, const TrainOptions& opts, Rng& rng,
                 const char* diag_tag, std::size_t epoch) {
  for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.uniform_int(i)]);
  for (std::size_t from = 0; from < idx.size(); from += opts.batch) {
    const std::size_t to = std::min(from + opts.batch, idx.size());
    nn::Tensor x({to - from, model.window()});
    nn::Tensor t({to - from, 1});
    for (std::size_t i = from; i < to; ++i) {
      const auto& s = samples[idx[i]];
      for (std::size_t j = 0; j < model.window(); ++j) x.at(i - from, j) = s.window[j];
      t.at(i - from, 0) = s.target;
    }
    try {
      nn::Graph g;
      nn::Var loss = g.mse(model.forward(g, x), g.input(std::move(t)));
      model.params().zero_grad();
      g.backward(loss);
      nn::adam_step(model.params(), opts.lr);
    } catch (const NumericError& e) {
      char buf[160];
      std::snprintf(buf, sizeof(buf), "%s %s: diverged at epoch %zu batch %zu: %s", diag_tag,
                    kind_name(model.kind()), epoch, from / opts.batch, e.what());
      throw NumericError(buf);
    }
  }
}

}  // namespace

TrainedForecaster train_global(Forecaster forecaster, const std::vector<data::WindowSample>& train,
                               const std::vector<data::WindowSample>& validation,
                               const TrainOptions& opts, Rng& rng) {
  if (train.empty()) throw ConfigError("train_global: no training samples");
  const auto t0 = std::chrono::steady_clock::now();

  TrainedForecaster best;
  best.model = forecaster;
  best.val_mse = eval_mse(forecaster, validation);
  best.best_epoch = 0;

  std::vector<std::size_t> idx(train.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;

  std::size_t since_best = 0;
  std::size_t epoch = 0;
  for (; epoch < opts.epochs; ++epoch) {
    train_epoch(forecaster, train, idx, opts, rng, "train_global", epoch);
    const double val = eval_mse(forecaster, validation);
    if (val < best.val_mse) {
      best.val_mse = val;
      best.model = forecaster;
      best.best_epoch = epoch + 1;
      since_best = 0;
    } else if (++since_best >= opts.patience) {
      ++epoch;
      break;
    }
  }
  best.epochs_run = epoch;
  best.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return best;
}

void refit(TrainedForecaster& tf, const std::vector<data::WindowSample>& pooled,
           std::size_t epochs, const TrainOptions& opts, Rng& rng) {
  if (pooled.empty()) throw ConfigError("refit: no samples");
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::size_t> idx(pooled.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  for (std::size_t epoch = 0; epoch < epochs; ++epoch)
    train_epoch(tf.model, pooled, idx, opts, rng, "refit", epoch);
  tf.train_seconds +=
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<double> forecast_recursive(const OneStepFn& predict, std::vector<double> window,
                                       std::size_t horizon) {
  std::vector<double> out;
  out.reserve(horizon);
  for (std::size_t i = 0; i < horizon; ++i) {
    const double next = predict(window);
    out.push_back(next);
    window.erase(window.begin());
    window.push_back(next);
  }
  return out;
}

std::vector<double> forecast_recursive(const Forecaster& model, std::vector<double> window,
                                       std::size_t horizon) {
  return forecast_recursive([&model](const std::vector<double>& w) { return model.predict_one(w); },
                            std::move(window), horizon);
}

std::string model_filename(const Forecaster& model) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(model.fingerprint()));
  return std::string(kind_name(model.kind())) + "-" + buf + ".model";
}

void save_forecaster(const std::string& dir, const Forecaster& model) {
  save_params(dir + "/" + model_filename(model), kind_name(model.kind()), model.fingerprint(),
              model.params());
}

Forecaster load_forecaster(const std::string& path, ForecasterKind kind, std::size_t window,
                           const ForecasterArch& arch) {
  Rng rng(0);  // weights are overwritten by the load
  Forecaster f = Forecaster::build(kind, window, arch, rng);
  load_params(path, kind_name(kind), f.fingerprint(), f.params());
  return f;
}

}  // namespace dcast::committee
