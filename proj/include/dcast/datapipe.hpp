#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace dcast::data {

/// One product's demand history. Values are doubles with NaN marking a
/// missing observation until fill_missing runs; preprocess then rewrites
/// them into normalized log space and records the inverse-transform
/// metadata here.
struct TimeSeries {
  std::string series_id;
  std::vector<double> values;
  double mean_scale = 0.0;    // per-series mean recorded at preprocessing
  bool zero_adjusted = false; // true iff min <= 0, so the +1 log branch applied
  bool preprocessed = false;

  bool has_missing() const;
  std::size_t length() const { return values.size(); }
  bool usable(std::size_t window, std::size_t horizon) const {
    return values.size() >= window + horizon;
  }
};

/// Train/validation/test boundaries as end indices into one series.
/// test_end - val_end is the forecast horizon.
struct SplitSpec {
  std::size_t train_end = 0;
  std::size_t val_end = 0;
  std::size_t test_end = 0;
  std::size_t horizon = 0;

  /// Default policy: test = horizon, validation = `validation` points,
  /// remainder train. Throws if the series is too short to hold all three.
  static SplitSpec tail(std::size_t length, std::size_t horizon, std::size_t validation);

  void validate() const;  // strictly increasing, test length == horizon
};

/// One supervised pair: `window` past values, `target` the next value.
struct WindowSample {
  std::vector<double> window;
  double target = 0.0;
  std::size_t series_index = 0;  // which series produced it
  std::size_t target_index = 0;  // position of target within that series
};

/// Reads `series_id,date,value` CSV. Dates are YYYY-MM-DD; one row per
/// series per day; gaps in the date range become missing slots. Values are
/// non-negative integers; an empty value field is a missing observation.
/// Series appear in first-seen order, values in date order.
std::vector<TimeSeries> load_csv(const std::string& path);

/// Replaces every missing slot with zero.
void fill_missing(TimeSeries& s);

constexpr std::size_t kStatFull = std::numeric_limits<std::size_t>::max();

/// Mean-scales then log-transforms in place and records the metadata.
/// Scale statistics (mean, min) are computed over values[0, stat_end);
/// the default covers the whole series. A second call on the same series
/// is a usage error, never a silent double-scale. An all-zero stat region
/// falls back to mean_scale = 1.
void preprocess(TimeSeries& s, std::size_t stat_end = kStatFull);

/// Sliding windows of `window` values with the target one step ahead.
/// Emits every sample whose target index lies in [target_lo, target_hi);
/// targets that lack `window` predecessors are skipped. Warns (stderr) and
/// returns empty when the range yields nothing.
std::vector<WindowSample> make_windows(const TimeSeries& s, std::size_t window,
                                       std::size_t target_lo, std::size_t target_hi,
                                       std::size_t series_index = 0);

enum class RoundMode { Nearest, Ceil };

/// Inverse chain for one transformed-space forecast: exp, minus the zero
/// adjustment, rescale by the series mean, round, clip below at zero.
long long postprocess_value(double w, const TimeSeries& meta,
                            RoundMode mode = RoundMode::Nearest);

std::vector<long long> postprocess_series(const std::vector<double>& w, const TimeSeries& meta,
                                          RoundMode mode = RoundMode::Nearest);

/// YYYY-MM-DD -> day count (civil days since 1970-01-01). Throws ParseError.
std::int64_t parse_date(const std::string& text);

}  // namespace dcast::data
