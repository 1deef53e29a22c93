#pragma once

#include <optional>
#include <string>
#include <vector>

namespace dcast::metrics {

struct SmapeOptions {
  double epsilon = 0.1;
  bool factor2 = false;  // halve the floored denominator (the Kaggle-variant reading)
};

/// SMAPE with a floored denominator:
/// (100/n) * sum |A-F| / max(|A|+|F|+eps, 0.5+eps).
double smape_mod(const std::vector<double>& actual, const std::vector<double>& forecast,
                 const SmapeOptions& opt = {});

enum class MaseDenominator {
  Test,   // naive one-step error over the evaluated horizon itself
  Train,  // conventional form: naive error over a training series
};

/// mean|A-F| / ((1/(n-1)) * sum |A_t - A_{t-1}|). Empty optional when the
/// scaling denominator is zero (constant actuals).
std::optional<double> mase(const std::vector<double>& actual, const std::vector<double>& forecast);

/// Train-scaled variant: denominator from `train` instead of `actual`.
std::optional<double> mase_train_scaled(const std::vector<double>& actual,
                                        const std::vector<double>& forecast,
                                        const std::vector<double>& train);

/// Per-model, per-seed error record: the row shape of the result tables.
struct ErrorRecord {
  std::string model;
  std::uint64_t seed = 0;
  double smape = 0.0;
  std::optional<double> mase;
  double train_seconds = 0.0;
};

struct Aggregate {
  double mean_smape = 0.0;
  double std_smape = 0.0;
  double mean_mase = 0.0;     // over records with defined MASE
  double std_mase = 0.0;
  std::size_t mase_defined = 0;
  double mean_train_seconds = 0.0;
};

/// Arithmetic mean and sample (n-1) standard deviation over seeds. A single
/// record gets std 0. Records with undefined MASE are excluded from the MASE
/// statistics only (warns on stderr).
Aggregate aggregate_runs(const std::vector<ErrorRecord>& records);

}  // namespace dcast::metrics
