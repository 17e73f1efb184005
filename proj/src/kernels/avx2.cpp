// AVX2/FMA variants. This translation unit is compiled with -mavx2 -mfma and
// must only be entered after a runtime CPU check.

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "ergo/kernels.hpp"

namespace ergo::kernels {

namespace {

inline __m256d abs_pd(__m256d x) {
  return _mm256_andnot_pd(_mm256_set1_pd(-0.0), x);
}

inline double hmax(__m256d v) {
  alignas(32) double lane[4];
  _mm256_store_pd(lane, v);
  return std::max(std::max(lane[0], lane[1]), std::max(lane[2], lane[3]));
}

inline double hsum(__m256d v) {
  alignas(32) double lane[4];
  _mm256_store_pd(lane, v);
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

// Cephes-style exp: x = n ln2 + r, exp(r) from a (3,3) Pade form.
// Inputs below -708 flush to zero; callers only pass x <= 0.
inline __m256d exp_pd(__m256d x) {
  const __m256d log2e = _mm256_set1_pd(1.4426950408889634073599);
  const __m256d c1 = _mm256_set1_pd(6.93145751953125E-1);
  const __m256d c2 = _mm256_set1_pd(1.42860682030941723212E-6);
  const __m256d p0 = _mm256_set1_pd(1.26177193074810590878E-4);
  const __m256d p1 = _mm256_set1_pd(3.02994407707441961300E-2);
  const __m256d p2 = _mm256_set1_pd(9.99999999999999999910E-1);
  const __m256d q0 = _mm256_set1_pd(3.00198505138664455042E-6);
  const __m256d q1 = _mm256_set1_pd(2.52448340349684104192E-3);
  const __m256d q2 = _mm256_set1_pd(2.27265548208155028766E-1);
  const __m256d q3 = _mm256_set1_pd(2.00000000000000000009E0);
  const __m256d lo = _mm256_set1_pd(-708.0);

  const __m256d underflow = _mm256_cmp_pd(x, lo, _CMP_LT_OQ);
  x = _mm256_max_pd(x, lo);

  __m256d n = _mm256_round_pd(_mm256_mul_pd(x, log2e),
                              _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  x = _mm256_fnmadd_pd(n, c1, x);
  x = _mm256_fnmadd_pd(n, c2, x);

  const __m256d xx = _mm256_mul_pd(x, x);
  __m256d px = _mm256_fmadd_pd(p0, xx, p1);
  px = _mm256_fmadd_pd(px, xx, p2);
  px = _mm256_mul_pd(px, x);
  __m256d qx = _mm256_fmadd_pd(q0, xx, q1);
  qx = _mm256_fmadd_pd(qx, xx, q2);
  qx = _mm256_fmadd_pd(qx, xx, q3);
  __m256d r = _mm256_div_pd(px, _mm256_sub_pd(qx, px));
  r = _mm256_fmadd_pd(_mm256_set1_pd(2.0), r, _mm256_set1_pd(1.0));

  // 2^n via the exponent field.
  const __m128i n32 = _mm256_cvtpd_epi32(n);
  __m256i n64 = _mm256_cvtepi32_epi64(n32);
  n64 = _mm256_add_epi64(n64, _mm256_set1_epi64x(1023));
  n64 = _mm256_slli_epi64(n64, 52);
  r = _mm256_mul_pd(r, _mm256_castsi256_pd(n64));
  return _mm256_andnot_pd(underflow, r);
}

double max_abs(const double* a, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_max_pd(acc, abs_pd(_mm256_loadu_pd(a + i)));
  double m = hmax(acc);
  for (; i < n; ++i) m = std::max(m, std::fabs(a[i]));
  return m;
}

double max_abs_diff(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_max_pd(
        acc0, abs_pd(_mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i))));
    acc1 = _mm256_max_pd(acc1, abs_pd(_mm256_sub_pd(_mm256_loadu_pd(a + i + 4),
                                                    _mm256_loadu_pd(b + i + 4))));
  }
  for (; i + 4 <= n; i += 4)
    acc0 = _mm256_max_pd(
        acc0, abs_pd(_mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i))));
  double m = hmax(_mm256_max_pd(acc0, acc1));
  for (; i < n; ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

double max_sq_diff_planar(const double* a, const double* b, std::size_t slots,
                          std::size_t dims) {
  __m256d best = _mm256_setzero_pd();
  std::size_t s = 0;
  for (; s + 4 <= slots; s += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t k = 0; k < dims; ++k) {
      const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + k * slots + s),
                                      _mm256_loadu_pd(b + k * slots + s));
      // Separate mul/add keeps the result bit-identical to the scalar path.
      acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
    }
    best = _mm256_max_pd(best, acc);
  }
  double m = hmax(best);
  for (; s < slots; ++s) {
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
  const __m256d scale = _mm256_set1_pd(inv_eps);
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = m + i * cols;
    __m256d vmax = _mm256_set1_pd(-std::numeric_limits<double>::infinity());
    std::size_t j = 0;
    for (; j + 4 <= cols; j += 4) {
      const __m256d z = _mm256_mul_pd(
          _mm256_sub_pd(_mm256_loadu_pd(g + j), _mm256_loadu_pd(row + j)), scale);
      vmax = _mm256_max_pd(vmax, z);
    }
    double hi = hmax(vmax);
    for (; j < cols; ++j) hi = std::max(hi, (g[j] - row[j]) * inv_eps);

    const __m256d vhi = _mm256_set1_pd(hi);
    __m256d vsum = _mm256_setzero_pd();
    j = 0;
    for (; j + 4 <= cols; j += 4) {
      const __m256d z = _mm256_mul_pd(
          _mm256_sub_pd(_mm256_loadu_pd(g + j), _mm256_loadu_pd(row + j)), scale);
      vsum = _mm256_add_pd(vsum, exp_pd(_mm256_sub_pd(z, vhi)));
    }
    double sum = hsum(vsum);
    for (; j < cols; ++j) sum += std::exp((g[j] - row[j]) * inv_eps - hi);
    out[i] = hi + std::log(sum);
  }
}

constexpr KernelTable kAvx2{"avx2", &max_abs, &max_abs_diff, &max_sq_diff_planar,
                            &row_logsumexp};

}  // namespace

const KernelTable* avx2_table() noexcept { return &kAvx2; }

}  // namespace ergo::kernels
