#pragma once

// Data-parallel inner loops used by the segment metrics and the optimal
// transport solvers. Each kernel has a portable scalar reference and, on
// x86-64, an AVX2/FMA variant. The active table is chosen once at first use
// from the CPU features; ERGO_SFDE_KERNELS=scalar|avx2|auto overrides it.
//
// The max-reductions are bit-identical across variants. row_logsumexp
// uses a vectorized exp and agrees with the scalar reference to a few ulp.

#include <cstddef>
#include <span>
#include <string_view>

namespace ergo::kernels {

struct KernelTable {
  const char* name;

  /// max_i |a[i]|
  double (*max_abs)(const double* a, std::size_t n);

  /// max_i |a[i] - b[i]|
  double (*max_abs_diff)(const double* a, const double* b, std::size_t n);

  /// Planar layout: component k of slot s lives at a[k * slots + s].
  /// Returns max_s sum_k (a - b)^2, summing components in ascending k.
  double (*max_sq_diff_planar)(const double* a, const double* b, std::size_t slots,
                               std::size_t dims);

  /// out[i] = log sum_j exp((g[j] - m[i * cols + j]) * inv_eps), stabilized
  /// by the row maximum.
  void (*row_logsumexp)(const double* m, std::size_t rows, std::size_t cols,
                        const double* g, double inv_eps, double* out);
};

const KernelTable& scalar_table() noexcept;

/// nullptr when the AVX2 variants were not compiled in.
const KernelTable* avx2_table() noexcept;

bool cpu_supports_avx2() noexcept;

/// Table selected for this process.
const KernelTable& active() noexcept;

/// Resolves a selection request ("scalar", "avx2", "auto") against the CPU.
const KernelTable& select(std::string_view request) noexcept;

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  return active().max_abs_diff(a.data(), b.data(), a.size());
}

}  // namespace ergo::kernels
