#include <algorithm>
#include <cmath>
#include <limits>

#include "ergo/kernels.hpp"

namespace ergo::kernels {

namespace {

double max_abs(const double* a, std::size_t n) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::fabs(a[i]));
  return m;
}

double max_abs_diff(const double* a, const double* b, std::size_t n) {
  double m = 0.0;
  for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

double max_sq_diff_planar(const double* a, const double* b, std::size_t slots,
                          std::size_t dims) {
  double m = 0.0;
  for (std::size_t s = 0; s < slots; ++s) {
    double acc = 0.0;
    for (std::size_t k = 0; k < dims; ++k) {
      const double d = a[k * slots + s] - b[k * slots + s];
      acc = acc + d * d;
    }
    m = std::max(m, acc);
  }
  return m;
}

void row_logsumexp(const double* m, std::size_t rows, std::size_t cols, const double* g,
                   double inv_eps, double* out) {
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = m + i * cols;
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < cols; ++j) hi = std::max(hi, (g[j] - row[j]) * inv_eps);
    double sum = 0.0;
    for (std::size_t j = 0; j < cols; ++j) sum += std::exp((g[j] - row[j]) * inv_eps - hi);
    out[i] = hi + std::log(sum);
  }
}

constexpr KernelTable kScalar{"scalar", &max_abs, &max_abs_diff, &max_sq_diff_planar,
                              &row_logsumexp};

}  // namespace

const KernelTable& scalar_table() noexcept { return kScalar; }

}  // namespace ergo::kernels
