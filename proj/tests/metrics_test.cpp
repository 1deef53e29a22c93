#include "doctest.h"

#include <vector>

#include "dcast/errors.hpp"
#include "dcast/metrics.hpp"
#include "dcast/rng.hpp"

using namespace dcast;
using namespace dcast::metrics;

TEST_CASE("smape_mod: exact forecast gives zero") {
  CHECK(smape_mod({3, 7, 0.2}, {3, 7, 0.2}) == 0.0);
}

TEST_CASE("smape_mod: hand value for A=[1], F=[0]") {
  // 100 * 1 / max(1 + 0 + 0.1, 0.6) = 100/1.1
  CHECK(smape_mod({1}, {0}) == doctest::Approx(90.909090909090907).epsilon(1e-12));
}

TEST_CASE("smape_mod: denominator floor prevents 0/0") {
  CHECK(smape_mod({0}, {0}) == 0.0);
}

TEST_CASE("smape_mod: length mismatch is an error") {
  CHECK_THROWS_AS(smape_mod({1, 2}, {1}), ConfigError);
}

TEST_CASE("smape_mod is symmetric in its arguments") {
  Rng rng(5);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> a(7), f(7);
    for (int i = 0; i < 7; ++i) {
      a[i] = rng.uniform(0, 20);
      f[i] = rng.uniform(0, 20);
    }
    CHECK(smape_mod(a, f) == smape_mod(f, a));
  }
}

TEST_CASE("smape_mod: above the floor the denominator is |A|+|F|+eps") {
  // |A|+|F|+0.1 = 5.1 >= 0.6
  CHECK(smape_mod({3}, {2}) == doctest::Approx(100.0 / 5.1));
  // factor-2 flag halves the denominator
  CHECK(smape_mod({3}, {2}, {0.1, true}) == doctest::Approx(200.0 / 5.1));
}

TEST_CASE("mase: exact forecast gives zero") {
  CHECK(mase({1, 2, 3, 4}, {1, 2, 3, 4}).value() == 0.0);
}

TEST_CASE("mase: hand value one") {
  // numerator mean|A-F| = 1; denominator mean of |diff| = 1
  CHECK(mase({1, 2, 3, 4}, {2, 3, 4, 5}).value() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("mase: constant actuals are undefined") {
  CHECK_FALSE(mase({2, 2, 2}, {1, 2, 3}).has_value());
}

TEST_CASE("mase is scale invariant when defined") {
  Rng rng(6);
  std::vector<double> a{1, 5, 2, 9, 4}, f{2, 4, 4, 7, 3};
  const double base = mase(a, f).value();
  for (double k : {0.5, 3.0, 100.0}) {
    std::vector<double> ka(a), kf(f);
    for (auto& x : ka) x *= k;
    for (auto& x : kf) x *= k;
    CHECK(mase(ka, kf).value() == doctest::Approx(base).epsilon(1e-12));
  }
}

TEST_CASE("mase: train-scaled variant uses the training series for the denominator") {
  // test actuals constant, but train series moves: defined under the train rule
  CHECK_FALSE(mase({2, 2, 2}, {1, 2, 3}).has_value());
  auto m = mase_train_scaled({2, 2, 2}, {1, 2, 3}, {0, 2, 4, 6});
  REQUIRE(m.has_value());
  // numerator = (1+0+1)/3, denominator = 2
  CHECK(*m == doctest::Approx((2.0 / 3.0) / 2.0));
}

TEST_CASE("aggregate_runs: hand sample std and degenerate cases") {
  std::vector<ErrorRecord> recs;
  for (double s : {1.0, 2.0, 3.0}) recs.push_back({"m", 0, s, s, 0.0});
  auto a = aggregate_runs(recs);
  CHECK(a.mean_smape == doctest::Approx(2.0));
  CHECK(a.std_smape == doctest::Approx(1.0));
  CHECK(a.mean_mase == doctest::Approx(2.0));
  CHECK(a.std_mase == doctest::Approx(1.0));

  auto single = aggregate_runs({{"m", 0, 5.0, 1.5, 0.0}});
  CHECK(single.mean_smape == 5.0);
  CHECK(single.std_smape == 0.0);

  std::vector<ErrorRecord> same;
  for (int i = 0; i < 4; ++i) same.push_back({"m", 0, 7.0, 2.0, 0.0});
  auto eq = aggregate_runs(same);
  CHECK(eq.std_smape == 0.0);
  CHECK(eq.std_mase == 0.0);
}

TEST_CASE("aggregate_runs: undefined MASE excluded from MASE stats only") {
  std::vector<ErrorRecord> recs;
  recs.push_back({"m", 1, 10.0, 2.0, 0.0});
  recs.push_back({"m", 2, 20.0, std::nullopt, 0.0});
  auto a = aggregate_runs(recs);
  CHECK(a.mean_smape == doctest::Approx(15.0));
  CHECK(a.mase_defined == 1);
  CHECK(a.mean_mase == doctest::Approx(2.0));
}
