#include <cstdlib>
#include <string_view>

#include "ergo/kernels.hpp"

namespace ergo::kernels {

#ifndef ERGO_HAVE_AVX2_KERNELS
const KernelTable* avx2_table() noexcept { return nullptr; }
#endif

bool cpu_supports_avx2() noexcept {
#if defined(ERGO_HAVE_AVX2_KERNELS) && (defined(__x86_64__) || defined(__i386__)) && \
    (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& select(std::string_view request) noexcept {
  if (request == "scalar") return scalar_table();
  const KernelTable* wide = avx2_table();
  if (wide != nullptr && cpu_supports_avx2()) return *wide;
  return scalar_table();
}

const KernelTable& active() noexcept {
  static const KernelTable& table = [] () -> const KernelTable& {
    const char* env = std::getenv("ERGO_SFDE_KERNELS");
    return select(env != nullptr ? std::string_view(env) : std::string_view("auto"));
  }();
  return table;
}

}  // namespace ergo::kernels
