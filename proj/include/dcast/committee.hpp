#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dcast/datapipe.hpp"
#include "dcast/layers.hpp"
#include "dcast/params.hpp"
#include "dcast/rng.hpp"

namespace dcast::committee {

/// The six committee members. This order defines the RL action indices 0-5
/// and the layout of every forecast vector in the project.
enum class ForecasterKind { Ffnn, Lstm, Gru, BiLstm, Cnn, CnnLstm };

constexpr std::array<ForecasterKind, 6> kAllKinds = {
    ForecasterKind::Ffnn, ForecasterKind::Lstm,   ForecasterKind::Gru,
    ForecasterKind::BiLstm, ForecasterKind::Cnn,  ForecasterKind::CnnLstm};

const char* kind_name(ForecasterKind kind);
ForecasterKind kind_from_name(const std::string& name);

struct ConvSpec {
  std::size_t filters = 16;
  std::size_t kernel = 5;
  std::size_t stride = 1;
};

/// Layer sizes for each architecture family; one instance covers the whole
/// committee.
struct ForecasterArch {
  std::vector<std::size_t> ffnn_hidden{64, 32};
  std::size_t rnn_hidden = 32;
  std::vector<ConvSpec> cnn_conv{{16, 5, 1}, {16, 3, 1}};
  std::size_t cnn_dense = 32;
  std::vector<ConvSpec> cnn_lstm_conv{{16, 5, 1}};
  std::size_t cnn_lstm_hidden = 32;

  /// Stable architecture descriptor for model-file fingerprints.
  std::string descriptor(ForecasterKind kind, std::size_t window) const;
};

/// One committee member: the network plus enough structure to run it.
class Forecaster {
 public:
  static Forecaster build(ForecasterKind kind, std::size_t window, const ForecasterArch& arch,
                          Rng& rng);

  /// [batch, window] -> [batch, 1], recorded on the graph.
  nn::Var forward(nn::Graph& g, const nn::Tensor& windows) const;

  /// One-step forecast in transformed space.
  double predict_one(const std::vector<double>& window) const;

  ForecasterKind kind() const { return kind_; }
  std::size_t window() const { return window_; }
  std::uint64_t fingerprint() const { return fingerprint_; }
  nn::NetworkParams& params() { return params_; }
  const nn::NetworkParams& params() const { return params_; }

 private:
  ForecasterKind kind_ = ForecasterKind::Ffnn;
  std::size_t window_ = 0;
  std::uint64_t fingerprint_ = 0;
  mutable nn::NetworkParams params_;
  std::vector<nn::Linear> dense_;
  nn::Linear head_;
  std::vector<nn::Conv1d> convs_;
  nn::LstmCell lstm_, lstm_rev_;
  nn::GruCell gru_;
};

struct TrainOptions {
  std::size_t epochs = 60;
  std::size_t batch = 64;
  double lr = 1e-3;
  std::size_t patience = 10;  // epochs without a validation improvement
};

struct TrainedForecaster {
  Forecaster model;
  double val_mse = 0.0;        // lowest validation MSE reached
  std::size_t best_epoch = 0;  // 0 = initial parameters
  std::size_t epochs_run = 0;
  double train_seconds = 0.0;
};

/// Global-model training: minimizes one-step MSE over samples pooled from
/// all series, keeps the parameter snapshot with the lowest validation MSE.
/// Stops early after `patience` epochs without improvement. Aborts with
/// diagnostics on a NaN loss.
TrainedForecaster train_global(Forecaster forecaster, const std::vector<data::WindowSample>& train,
                               const std::vector<data::WindowSample>& validation,
                               const TrainOptions& opts, Rng& rng);

/// Continues training on a pooled train+validation sample set for a fixed
/// epoch count (no validation tracking): the refit step before final test
/// evaluation.
void refit(TrainedForecaster& tf, const std::vector<data::WindowSample>& pooled,
           std::size_t epochs, const TrainOptions& opts, Rng& rng);

/// One-step predictor signature: maps a window to the next value.
using OneStepFn = std::function<double(const std::vector<double>&)>;

/// Multi-step forecast by feeding each prediction back into the window.
std::vector<double> forecast_recursive(const OneStepFn& predict, std::vector<double> window,
                                       std::size_t horizon);

std::vector<double> forecast_recursive(const Forecaster& model, std::vector<double> window,
                                       std::size_t horizon);

/// `<kind>-<fingerprint>.model` inside dir.
std::string model_filename(const Forecaster& model);

void save_forecaster(const std::string& dir, const Forecaster& model);

/// Builds the architecture from (kind, window, arch), then loads weights.
/// Refuses files whose kind or fingerprint disagree.
Forecaster load_forecaster(const std::string& path, ForecasterKind kind, std::size_t window,
                           const ForecasterArch& arch);

}  // namespace dcast::committee
