#include "dcast/metrics.hpp"

#include <cmath>
#include <iostream>

#include "dcast/errors.hpp"

namespace dcast::metrics {

double smape_mod(const std::vector<double>& actual, const std::vector<double>& forecast,
                 const SmapeOptions& opt) {
  if (actual.size() != forecast.size())
    throw ConfigError("smape_mod: length mismatch " + std::to_string(actual.size()) + " vs " +
                      std::to_string(forecast.size()));
  if (actual.empty()) throw ConfigError("smape_mod: empty sequences");
  double acc = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    double den = std::max(std::abs(actual[i]) + std::abs(forecast[i]) + opt.epsilon,
                          0.5 + opt.epsilon);
    if (opt.factor2) den /= 2.0;
    acc += std::abs(actual[i] - forecast[i]) / den;
  }
  return 100.0 * acc / static_cast<double>(actual.size());
}

namespace {

std::optional<double> mase_impl(const std::vector<double>& actual,
                                const std::vector<double>& forecast,
                                const std::vector<double>& scale_src) {
  if (actual.size() != forecast.size()) throw ConfigError("mase: length mismatch");
  if (scale_src.size() < 2) throw ConfigError("mase: need at least 2 points for the naive scale");
  double num = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) num += std::abs(actual[i] - forecast[i]);
  num /= static_cast<double>(actual.size());
  double den = 0.0;
  for (std::size_t i = 1; i < scale_src.size(); ++i)
    den += std::abs(scale_src[i] - scale_src[i - 1]);
  den /= static_cast<double>(scale_src.size() - 1);
  if (den == 0.0) return std::nullopt;
  return num / den;
}

}  // namespace

std::optional<double> mase(const std::vector<double>& actual,
                           const std::vector<double>& forecast) {
  return mase_impl(actual, forecast, actual);
}

std::optional<double> mase_train_scaled(const std::vector<double>& actual,
                                        const std::vector<double>& forecast,
                                        const std::vector<double>& train) {
  return mase_impl(actual, forecast, train);
}

Aggregate aggregate_runs(const std::vector<ErrorRecord>& records) {
  if (records.empty()) throw ConfigError("aggregate_runs: no records");
  Aggregate a;
  auto mean_std = [](const std::vector<double>& xs, double& mean, double& sd) {
    double sum = 0.0;
    for (double x : xs) sum += x;
    mean = sum / static_cast<double>(xs.size());
    if (xs.size() < 2) {
      sd = 0.0;  // single record: std 0 by convention
      return;
    }
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  };

  std::vector<double> smapes, mases, secs;
  for (const auto& r : records) {
    smapes.push_back(r.smape);
    secs.push_back(r.train_seconds);
    if (r.mase.has_value())
      mases.push_back(*r.mase);
    else
      std::cerr << "warning: undefined MASE for model " << r.model << " seed " << r.seed
                << ", excluded from MASE aggregation\n";
  }
  mean_std(smapes, a.mean_smape, a.std_smape);
  double sec_sd = 0.0;
  mean_std(secs, a.mean_train_seconds, sec_sd);
  a.mase_defined = mases.size();
  if (!mases.empty()) mean_std(mases, a.mean_mase, a.std_mase);
  return a;
}

}  // namespace dcast::metrics
