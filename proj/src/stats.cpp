#include "ergo/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/beta.hpp>
#include <cmath>
#include <vector>

#include "ergo/error.hpp"

namespace ergo::stats {

void Moments::add(double x) noexcept {
  ++n_;
  const double delta = x - mean_;
  mean_ += delta / static_cast<double>(n_);
  m2_ += delta * (x - mean_);
}

void Moments::merge(const Moments& other) noexcept {
  if (other.n_ == 0) return;
  if (n_ == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(n_);
  const double nb = static_cast<double>(other.n_);
  const double delta = other.mean_ - mean_;
  const double total = na + nb;
  mean_ += delta * nb / total;
  m2_ += other.m2_ + delta * delta * na * nb / total;
  n_ += other.n_;
}

double Moments::variance() const noexcept {
  return n_ < 2 ? 0.0 : m2_ / static_cast<double>(n_ - 1);
}

double Moments::stderr_of_mean() const noexcept {
  return n_ == 0 ? 0.0 : std::sqrt(variance() / static_cast<double>(n_));
}

MeanEstimate mean_estimate(std::span<const double> xs) {
  Moments m;
  for (double x : xs) m.add(x);
  return {m.mean(), m.stderr_of_mean(), m.count()};
}

MeanEstimate paired_difference(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), ErrorKind::dimension_mismatch,
          "paired_difference: sample sizes differ");
  Moments m;
  for (std::size_t i = 0; i < a.size(); ++i) m.add(a[i] - b[i]);
  return {m.mean(), m.stderr_of_mean(), m.count()};
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y,
                     std::span<const double> weights) {
  require(x.size() == y.size(), ErrorKind::dimension_mismatch, "linear_fit: size mismatch");
  require(x.size() >= 2, ErrorKind::invalid_argument, "linear_fit: need at least two points");
  const bool weighted = !weights.empty();
  if (weighted)
    require(weights.size() == x.size(), ErrorKind::dimension_mismatch,
            "linear_fit: weight size mismatch");

  double sw = 0, swx = 0, swy = 0, swxx = 0, swxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double w = weighted ? weights[i] : 1.0;
    sw += w;
    swx += w * x[i];
    swy += w * y[i];
    swxx += w * x[i] * x[i];
    swxy += w * x[i] * y[i];
  }
  const double det = sw * swxx - swx * swx;
  require(det > 0.0, ErrorKind::degenerate_fit, "linear_fit: abscissae are degenerate");

  LinearFit fit;
  fit.weighted = weighted;
  fit.slope = (sw * swxy - swx * swy) / det;
  fit.intercept = (swxx * swy - swx * swxy) / det;
  if (weighted) {
    fit.slope_stderr = std::sqrt(sw / det);
    fit.intercept_stderr = std::sqrt(swxx / det);
  } else if (x.size() > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = y[i] - fit.intercept - fit.slope * x[i];
      rss += r * r;
    }
    const double s2 = rss / static_cast<double>(x.size() - 2);
    fit.slope_stderr = std::sqrt(s2 * sw / det);
    fit.intercept_stderr = std::sqrt(s2 * swxx / det);
  }
  return fit;
}

Interval clopper_pearson(std::size_t successes, std::size_t trials, double confidence) {
  require(trials > 0, ErrorKind::invalid_argument, "clopper_pearson: zero trials");
  require(successes <= trials, ErrorKind::invalid_argument,
          "clopper_pearson: successes exceed trials");
  const double alpha = 1.0 - confidence;
  const double k = static_cast<double>(successes);
  const double n = static_cast<double>(trials);
  Interval iv;
  iv.lower = successes == 0
                 ? 0.0
                 : boost::math::quantile(boost::math::beta_distribution<>(k, n - k + 1.0),
                                         alpha / 2.0);
  iv.upper = successes == trials
                 ? 1.0
                 : boost::math::quantile(boost::math::beta_distribution<>(k + 1.0, n - k),
                                         1.0 - alpha / 2.0);
  return iv;
}

double kolmogorov_survival(double x) {
  if (x <= 0.0) return 1.0;
  if (x < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  require(!a.empty() && !b.empty(), ErrorKind::invalid_argument, "ks_two_sample: empty sample");
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < sa.size() && j < sb.size()) {
    const double v = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] == v) ++i;
    while (j < sb.size() && sb[j] == v) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ne = na * nb / (na + nb);
  const double root = std::sqrt(ne);
  return {d, kolmogorov_survival((root + 0.12 + 0.11 / root) * d)};
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace ergo::stats
