#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "dcast/layers.hpp"
#include "dcast/params.hpp"
#include "dcast/rng.hpp"

namespace dcast::ensemble {

constexpr std::size_t kCommitteeSize = 6;

/// The six per-model forecasts for one step, in action-index order.
using CommitteeForecast = std::array<double, kCommitteeSize>;

double ensemble_mean(const CommitteeForecast& cf);

/// Median of six values: mean of the two central order statistics.
double ensemble_median(const CommitteeForecast& cf);

struct StackingConfig {
  std::size_t hidden = 16;
  std::size_t epochs = 300;
  std::size_t batch = 32;
  double lr = 1e-2;
};

/// Stacked-generalization blender: a 6 -> hidden -> 1 feedforward net over
/// the committee outputs only.
class StackingModel {
 public:
  StackingModel(const StackingConfig& cfg, Rng& rng);

  /// Trains by MSE on (committee forecast, actual) pairs. The caller is
  /// responsible for sourcing pairs from data the committee did not fit.
  void train(const std::vector<std::pair<CommitteeForecast, double>>& pairs, Rng& rng);

  double predict(const CommitteeForecast& cf) const;

  nn::NetworkParams& params() { return params_; }

 private:
  StackingConfig cfg_;
  mutable nn::NetworkParams params_;
  nn::Linear l1_, l2_;
};

}  // namespace dcast::ensemble
