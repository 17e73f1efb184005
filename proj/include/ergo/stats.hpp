#pragma once

#include <cstddef>
#include <span>

namespace ergo::stats {

/// Welford accumulator. Feed values in a fixed order for reproducible sums.
class Moments {
 public:
  void add(double x) noexcept;
  void merge(const Moments& other) noexcept;

  std::size_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  /// Unbiased sample variance (0 for fewer than two samples).
  double variance() const noexcept;
  double stderr_of_mean() const noexcept;

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

struct MeanEstimate {
  double mean = 0.0;
  double stderr = 0.0;
  std::size_t n = 0;
};

MeanEstimate mean_estimate(std::span<const double> xs);

/// Paired difference a[i] - b[i].
MeanEstimate paired_difference(std::span<const double> a, std::span<const double> b);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double intercept_stderr = 0.0;
  bool weighted = false;
};

/// Least squares y ~ intercept + slope * x. With weights (inverse variances)
/// the standard errors come from the weights; without, from the residuals.
LinearFit linear_fit(std::span<const double> x, std::span<const double> y,
                     std::span<const double> weights = {});

struct Interval {
  double lower = 0.0;
  double upper = 1.0;
};

/// Two-sided Clopper-Pearson interval for k successes in n trials.
Interval clopper_pearson(std::size_t successes, std::size_t trials, double confidence = 0.95);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Two-sample Kolmogorov-Smirnov test, asymptotic p-value.
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

/// Kolmogorov survival function Q(x) = 2 sum (-1)^{k-1} exp(-2 k^2 x^2).
double kolmogorov_survival(double x);

double normal_cdf(double z);

}  // namespace ergo::stats
