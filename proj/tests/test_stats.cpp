#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "ergo/error.hpp"
#include "ergo/stats.hpp"

using namespace ergo::stats;

TEST(Moments, MergeEqualsSequential) {
  Moments all, left, right;
  for (int i = 0; i < 100; ++i) {
    const double x = std::sin(i * 0.37) * 5.0;
    all.add(x);
    (i < 40 ? left : right).add(x);
  }
  left.merge(right);
  EXPECT_EQ(left.count(), all.count());
  EXPECT_NEAR(left.mean(), all.mean(), 1e-14);
  EXPECT_NEAR(left.variance(), all.variance(), 1e-12);
}

TEST(LinearFit, ExactLine) {
  const std::vector<double> x{0, 1, 2, 3}, y{1, -1, -3, -5};
  const auto fit = linear_fit(x, y);
  EXPECT_NEAR(fit.slope, -2.0, 1e-14);
  EXPECT_NEAR(fit.intercept, 1.0, 1e-14);
  EXPECT_NEAR(fit.slope_stderr, 0.0, 1e-12);
}

TEST(LinearFit, WeightedStandardErrors) {
  // Two points with unit variances: slope variance = 2 / (x1 - x0)^2.
  const std::vector<double> x{0, 2}, y{0, 1}, w{1, 1};
  const auto fit = linear_fit(x, y, w);
  EXPECT_NEAR(fit.slope, 0.5, 1e-15);
  EXPECT_NEAR(fit.slope_stderr, std::sqrt(0.5), 1e-14);
}

TEST(LinearFit, DegenerateAbscissae) {
  const std::vector<double> x{1, 1}, y{0, 1};
  try {
    linear_fit(x, y);
    FAIL();
  } catch (const ergo::Error& e) {
    EXPECT_EQ(e.kind(), ergo::ErrorKind::degenerate_fit);
  }
}

TEST(ClopperPearson, ClosedForms) {
  // k = 0: upper = 1 - (alpha/2)^(1/n); k = n: lower = (alpha/2)^(1/n).
  const auto zero = clopper_pearson(0, 20);
  EXPECT_EQ(zero.lower, 0.0);
  EXPECT_NEAR(zero.upper, 1.0 - std::pow(0.025, 1.0 / 20), 1e-12);
  const auto all = clopper_pearson(20, 20);
  EXPECT_EQ(all.upper, 1.0);
  EXPECT_NEAR(all.lower, std::pow(0.025, 1.0 / 20), 1e-12);
  const auto mid = clopper_pearson(5, 10);
  EXPECT_NEAR(mid.lower, 0.18708602844739, 1e-9);
  EXPECT_NEAR(mid.upper, 0.81291397155261, 1e-9);
}

TEST(KolmogorovSmirnov, SurvivalValues) {
  EXPECT_NEAR(kolmogorov_survival(1.36), 0.0494, 5e-4);
  EXPECT_NEAR(kolmogorov_survival(1.63), 0.0098, 3e-4);
  EXPECT_EQ(kolmogorov_survival(0.0), 1.0);
}

TEST(KolmogorovSmirnov, StatisticOnDisjointSamples) {
  const std::vector<double> a{1, 2, 3}, b{4, 5, 6};
  const auto r = ks_two_sample(a, b);
  EXPECT_EQ(r.statistic, 1.0);
  const std::vector<double> c{1, 2, 3};
  EXPECT_EQ(ks_two_sample(a, c).statistic, 0.0);
}

TEST(NormalCdf, Values) {
  EXPECT_NEAR(normal_cdf(0.0), 0.5, 1e-15);
  EXPECT_NEAR(normal_cdf(1.959963984540054), 0.975, 1e-12);
}
