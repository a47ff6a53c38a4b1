#include "stablehomog/kernels.hpp"

#include <cstdlib>
#include <cstring>

#include "stablehomog/errors.hpp"

namespace stablehomog::kernels {

#if !defined(STABLEHOMOG_BUILD_AVX2)
const Kernels& avx2_kernels() {
  static const Kernels none{};
  return none;
}
#endif

namespace {

bool avx2_usable() {
#if defined(STABLEHOMOG_BUILD_AVX2) && defined(__x86_64__)
  return avx2_kernels().row_diff != nullptr &&
         __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const Kernels& select() {
  const char* req = std::getenv("STABLE_HOMOG_SIMD");
  if (req == nullptr || std::strcmp(req, "auto") == 0)
    return avx2_usable() ? avx2_kernels() : scalar_kernels();
  if (std::strcmp(req, "scalar") == 0) return scalar_kernels();
  if (std::strcmp(req, "avx2") == 0) {
    if (!avx2_usable())
      throw config_error("STABLE_HOMOG_SIMD=avx2 requested but AVX2 kernels "
                         "are unavailable on this build/CPU");
    return avx2_kernels();
  }
  throw config_error(std::string("unknown STABLE_HOMOG_SIMD value: ") + req);
}

}  // namespace

const Kernels& active() {
  static const Kernels& chosen = select();
  return chosen;
}

}  // namespace stablehomog::kernels
