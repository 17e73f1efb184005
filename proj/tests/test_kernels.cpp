#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "ergo/kernels.hpp"
#include "ergo/rng.hpp"

using namespace ergo::kernels;

namespace {

std::vector<double> noise(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  ergo::rng::Engine e({seed, 0, ergo::rng::Substream::sampler});
  std::vector<double> v(n);
  for (auto& x : v) x = scale * ergo::rng::standard_normal(e);
  return v;
}

const KernelTable* wide() {
  return cpu_supports_avx2() ? avx2_table() : nullptr;
}

}  // namespace

TEST(Kernels, SelectHonoursRequest) {
  EXPECT_STREQ(select("scalar").name, "scalar");
  if (wide()) EXPECT_STREQ(select("avx2").name, wide()->name);
  EXPECT_NE(select("auto").name, nullptr);
}

TEST(Kernels, ScalarReference) {
  const auto& s = scalar_table();
  const double a[] = {1.0, -3.5, 2.0};
  const double b[] = {0.5, -1.0, 2.0};
  EXPECT_EQ(s.max_abs(a, 3), 3.5);
  EXPECT_EQ(s.max_abs_diff(a, b, 3), 2.5);
  // Two components, three slots.
  const double pa[] = {0, 1, 2, 0, 0, 0};
  const double pb[] = {0, 0, 0, 3, 0, 1};
  EXPECT_EQ(s.max_sq_diff_planar(pa, pb, 3, 2), 9.0);
  EXPECT_EQ(s.max_abs(a, 0), 0.0);
}

TEST(Kernels, MaxReductionsBitIdentical) {
  const KernelTable* w = wide();
  if (!w) GTEST_SKIP() << "AVX2 variants unavailable";
  const auto& s = scalar_table();
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 15u, 16u, 17u, 33u, 1000u, 4099u}) {
    const auto a = noise(n, n + 1);
    const auto b = noise(n, n + 2);
    EXPECT_EQ(s.max_abs(a.data(), n), w->max_abs(a.data(), n)) << n;
    EXPECT_EQ(s.max_abs_diff(a.data(), b.data(), n), w->max_abs_diff(a.data(), b.data(), n)) << n;
    for (std::size_t dims : {1u, 2u, 3u, 5u}) {
      const auto pa = noise(n * dims, 100 + n);
      const auto pb = noise(n * dims, 200 + n);
      EXPECT_EQ(s.max_sq_diff_planar(pa.data(), pb.data(), n, dims),
                w->max_sq_diff_planar(pa.data(), pb.data(), n, dims))
          << n << " x " << dims;
    }
  }
}

TEST(Kernels, MaxAbsHandlesSignedZeroAndLargeValues) {
  const KernelTable* w = wide();
  if (!w) GTEST_SKIP() << "AVX2 variants unavailable";
  std::vector<double> v(13, -0.0);
  v[11] = -1e300;
  EXPECT_EQ(w->max_abs(v.data(), v.size()), 1e300);
  EXPECT_EQ(scalar_table().max_abs(v.data(), v.size()), 1e300);
}

TEST(Kernels, RowLogSumExpMatchesScalar) {
  const KernelTable* w = wide();
  if (!w) GTEST_SKIP() << "AVX2 variants unavailable";
  const auto& s = scalar_table();
  for (std::size_t cols : {1u, 3u, 4u, 9u, 64u, 131u}) {
    const std::size_t rows = 11;
    auto m = noise(rows * cols, cols, 3.0);
    for (auto& x : m) x = std::fabs(x);
    const auto g = noise(cols, cols + 50);
    for (double inv_eps : {0.5, 10.0, 1000.0}) {
      std::vector<double> a(rows), b(rows);
      s.row_logsumexp(m.data(), rows, cols, g.data(), inv_eps, a.data());
      w->row_logsumexp(m.data(), rows, cols, g.data(), inv_eps, b.data());
      for (std::size_t i = 0; i < rows; ++i)
        EXPECT_NEAR(a[i], b[i], 1e-13 * std::max(1.0, std::fabs(a[i]))) << cols << " " << inv_eps;
    }
  }
}

TEST(Kernels, RowLogSumExpReference) {
  const double m[] = {0.0, 1.0, 2.0};
  const double g[] = {0.0, 0.0, 0.0};
  double out = 0.0;
  scalar_table().row_logsumexp(m, 1, 3, g, 1.0, &out);
  EXPECT_NEAR(out, std::log(1.0 + std::exp(-1.0) + std::exp(-2.0)), 1e-15);
}
