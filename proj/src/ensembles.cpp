#include "dcast/ensembles.hpp"

#include <algorithm>

#include "dcast/errors.hpp"
#include "dcast/graph.hpp"

namespace dcast::ensemble {

double ensemble_mean(const CommitteeForecast& cf) {
  double acc = 0.0;
  for (double v : cf) acc += v;
  return acc / static_cast<double>(cf.size());
}

double ensemble_median(const CommitteeForecast& cf) {
  CommitteeForecast sorted = cf;
  std::sort(sorted.begin(), sorted.end());
  return 0.5 * (sorted[kCommitteeSize / 2 - 1] + sorted[kCommitteeSize / 2]);
}

StackingModel::StackingModel(const StackingConfig& cfg, Rng& rng) : cfg_(cfg) {
  l1_ = nn::Linear(params_, rng, kCommitteeSize, cfg.hidden, "meta.l1");
  l2_ = nn::Linear(params_, rng, cfg.hidden, 1, "meta.l2");
}

namespace {

nn::Tensor batch_inputs(const std::vector<std::pair<CommitteeForecast, double>>& pairs,
                        const std::vector<std::size_t>& idx, std::size_t from, std::size_t to) {
  nn::Tensor x({to - from, kCommitteeSize});
  for (std::size_t i = from; i < to; ++i)
    for (std::size_t j = 0; j < kCommitteeSize; ++j) x.at(i - from, j) = pairs[idx[i]].first[j];
  return x;
}

}  // namespace

void StackingModel::train(const std::vector<std::pair<CommitteeForecast, double>>& pairs,
                          Rng& rng) {
  if (pairs.empty()) throw ConfigError("stacking: no training pairs");
  std::vector<std::size_t> idx(pairs.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  for (std::size_t epoch = 0; epoch < cfg_.epochs; ++epoch) {
    // Fisher-Yates with our own rng keeps runs reproducible
    for (std::size_t i = idx.size(); i > 1; --i)
      std::swap(idx[i - 1], idx[rng.uniform_int(i)]);
    for (std::size_t from = 0; from < idx.size(); from += cfg_.batch) {
      const std::size_t to = std::min(from + cfg_.batch, idx.size());
      nn::Graph g;
      nn::Var x = g.input(batch_inputs(pairs, idx, from, to));
      nn::Tensor t({to - from, 1});
      for (std::size_t i = from; i < to; ++i) t.at(i - from, 0) = pairs[idx[i]].second;
      nn::Var pred = l2_.forward(g, params_, g.relu(l1_.forward(g, params_, x)));
      nn::Var loss = g.mse(pred, g.input(std::move(t)));
      params_.zero_grad();
      g.backward(loss);
      nn::adam_step(params_, cfg_.lr);
    }
  }
}

double StackingModel::predict(const CommitteeForecast& cf) const {
  nn::Graph g;
  nn::Tensor x({1, kCommitteeSize});
  for (std::size_t j = 0; j < kCommitteeSize; ++j) x.at(0, j) = cf[j];
  nn::Var pred = l2_.forward(g, params_, g.relu(l1_.forward(g, params_, g.input(std::move(x)))));
  return g.value(pred)[0];
}

}  // namespace dcast::ensemble
