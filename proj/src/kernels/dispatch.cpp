#include <cstdlib>
#include <string_view>

#include "jsdscore/kernels.hpp"

namespace jsdscore::kernels {

#if defined(JSDSCORE_HAVE_AVX2)
const KernelTable& avx2_table() noexcept;  // kernels/avx2.cpp
#endif

const KernelTable* avx2() noexcept {
#if defined(JSDSCORE_HAVE_AVX2)
  static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? &avx2_table() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() noexcept {
  static const KernelTable& table = [] () -> const KernelTable& {
    if (const char* env = std::getenv("JSDSCORE_SIMD"); env != nullptr && std::string_view(env) == "scalar") {
      return scalar();
    }
    if (const KernelTable* t = avx2()) return *t;
    return scalar();
  }();
  return table;
}

}  // namespace jsdscore::kernels
