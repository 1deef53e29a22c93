#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "dcast/datapipe.hpp"
#include "dcast/errors.hpp"
#include "dcast/rng.hpp"

using namespace dcast;
using namespace dcast::data;

namespace {

std::string write_temp(const std::string& text) {
  static int counter = 0;
  std::string path = "datapipe_test_" + std::to_string(counter++) + ".csv";
  std::ofstream os(path);
  os << text;
  return path;
}

}  // namespace

TEST_CASE("load_csv: two ids over three days give two length-3 series") {
  auto path = write_temp(
      "series_id,date,value\n"
      "a,2013-01-01,1\n"
      "a,2013-01-02,2\n"
      "a,2013-01-03,3\n"
      "b,2013-01-01,4\n"
      "b,2013-01-02,5\n"
      "b,2013-01-03,6\n");
  auto series = load_csv(path);
  std::remove(path.c_str());
  REQUIRE(series.size() == 2);
  CHECK(series[0].series_id == "a");
  CHECK(series[0].values == std::vector<double>{1, 2, 3});
  CHECK(series[1].values == std::vector<double>{4, 5, 6});
}

TEST_CASE("load_csv: a gap day becomes a missing slot, zero after fill") {
  auto path = write_temp(
      "series_id,date,value\n"
      "a,2013-01-01,1\n"
      "a,2013-01-03,3\n");
  auto series = load_csv(path);
  std::remove(path.c_str());
  REQUIRE(series.size() == 1);
  REQUIRE(series[0].values.size() == 3);
  CHECK(series[0].has_missing());
  fill_missing(series[0]);
  CHECK(series[0].values == std::vector<double>{1, 0, 3});
}

TEST_CASE("load_csv: malformed value fails with the line number") {
  auto path = write_temp(
      "series_id,date,value\n"
      "a,2013-01-01,1\n"
      "a,2013-01-02,abc\n");
  CHECK_THROWS_WITH_AS(load_csv(path), doctest::Contains("line 3"), ParseError);
  std::remove(path.c_str());
}

TEST_CASE("load_csv: empty file and empty value field") {
  auto path = write_temp("series_id,date,value\n");
  CHECK_THROWS_AS(load_csv(path), ParseError);
  std::remove(path.c_str());

  path = write_temp(
      "series_id,date,value\n"
      "a,2013-01-01,\n"
      "a,2013-01-02,7\n");
  auto series = load_csv(path);
  std::remove(path.c_str());
  CHECK(series[0].has_missing());
  fill_missing(series[0]);
  CHECK(series[0].values == std::vector<double>{0, 7});
}

TEST_CASE("fill_missing is the identity on complete series and zeroes all-missing ones") {
  TimeSeries s;
  s.values = {1, 2, 3};
  fill_missing(s);
  CHECK(s.values == std::vector<double>{1, 2, 3});
  TimeSeries all;
  all.values = {std::nan(""), std::nan("")};
  fill_missing(all);
  CHECK(all.values == std::vector<double>{0, 0});
}

TEST_CASE("preprocess: [2,4,6] scales by mean 4 and logs directly") {
  TimeSeries s;
  s.values = {2, 4, 6};
  preprocess(s);
  CHECK(s.mean_scale == doctest::Approx(4.0));
  CHECK_FALSE(s.zero_adjusted);
  CHECK(s.values[0] == doctest::Approx(std::log(0.5)));
  CHECK(s.values[1] == doctest::Approx(std::log(1.0)));
  CHECK(s.values[2] == doctest::Approx(std::log(1.5)));
}

TEST_CASE("preprocess: all-zero series falls back to scale 1 and transforms to zeros") {
  TimeSeries s;
  s.values = {0, 0, 0};
  preprocess(s);
  CHECK(s.mean_scale == 1.0);
  CHECK(s.zero_adjusted);
  for (double v : s.values) CHECK(v == 0.0);
}

TEST_CASE("preprocess: zero branch of the log transform maps 0 to 0") {
  TimeSeries s;
  s.values = {0, std::exp(1.0) - 1.0};
  preprocess(s);
  CHECK(s.zero_adjusted);
  CHECK(s.values[0] == doctest::Approx(std::log(0.0 / s.mean_scale + 1.0)));
}

TEST_CASE("preprocess twice is a usage error, not a double scale") {
  TimeSeries s;
  s.values = {1, 2, 3};
  preprocess(s);
  CHECK_THROWS_AS(preprocess(s), std::logic_error);
}

TEST_CASE("make_windows: a length-40 train region gives 5 samples, no leakage") {
  TimeSeries s;
  s.series_id = "w";
  s.values.resize(60);
  for (std::size_t i = 0; i < s.values.size(); ++i) s.values[i] = static_cast<double>(i);
  auto samples = make_windows(s, 35, 0, 40);
  REQUIRE(samples.size() == 5);
  CHECK(samples.front().target_index == 35);
  CHECK(samples.back().target_index == 39);  // last target = last train index
  for (const auto& w : samples) {
    CHECK(w.window.size() == 35);
    CHECK(w.target == s.values[w.target_index]);
    CHECK(w.target_index < 40);
  }
}

TEST_CASE("make_windows: a length-35 region yields nothing") {
  TimeSeries s;
  s.series_id = "short";
  s.values.resize(35, 1.0);
  auto samples = make_windows(s, 35, 0, 35);
  CHECK(samples.empty());
}

TEST_CASE("postprocess hand chains") {
  TimeSeries za;
  za.mean_scale = 3.0;
  za.zero_adjusted = true;
  CHECK(postprocess_value(0.0, za) == 0);

  TimeSeries plain;
  plain.mean_scale = 4.0;
  plain.zero_adjusted = false;
  CHECK(postprocess_value(std::log(0.5), plain) == 2);

  // strongly negative pre-clip value
  TimeSeries clip;
  clip.mean_scale = 1.0;
  clip.zero_adjusted = true;
  CHECK(postprocess_value(-5.0, clip) == 0);
}

TEST_CASE("round trip: postprocess(preprocess(x)) is the identity on integer series") {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    Rng r = rng.fork(static_cast<std::uint64_t>(trial));
    const std::size_t n = 1 + r.uniform_int(80);
    TimeSeries s;
    s.values.resize(n);
    std::vector<long long> original(n);
    for (std::size_t i = 0; i < n; ++i) {
      original[i] = static_cast<long long>(r.uniform_int(1000));
      if (r.uniform() < 0.2) original[i] = 0;
      s.values[i] = static_cast<double>(original[i]);
    }
    preprocess(s);
    auto restored = postprocess_series(s.values, s);
    CHECK(restored == original);
  }
}

TEST_CASE("split: tail policy and validation") {
  auto sp = SplitSpec::tail(192, 28, 28);
  CHECK(sp.train_end == 136);
  CHECK(sp.val_end == 164);
  CHECK(sp.test_end == 192);
  CHECK_THROWS_AS(SplitSpec::tail(50, 28, 28), ConfigError);

  SplitSpec bad;
  bad.train_end = 10;
  bad.val_end = 10;
  bad.test_end = 20;
  bad.horizon = 10;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("ceil rounding mode rounds up") {
  TimeSeries meta;
  meta.mean_scale = 4.0;
  meta.zero_adjusted = false;
  // 0.3 * 4 = 1.2 -> 1 nearest, 2 ceil
  CHECK(postprocess_value(std::log(0.3), meta, RoundMode::Nearest) == 1);
  CHECK(postprocess_value(std::log(0.3), meta, RoundMode::Ceil) == 2);
}
