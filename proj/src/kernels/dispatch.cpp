#include "codyad/kernels/kernels.hpp"

#include <cstdlib>
#include <string_view>

namespace codyad::kernels {

#if defined(CODYAD_HAVE_AVX2)
const KernelTable& avx2_table();
#endif

const KernelTable* avx2_kernels() {
#if defined(CODYAD_HAVE_AVX2)
    static const bool supported = [] {
        __builtin_cpu_init();
        return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    }();
    return supported ? &avx2_table() : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable& select(bool deterministic) {
    if (deterministic) return scalar_kernels();
    if (const char* env = std::getenv("CODYAD_KERNELS"); env && std::string_view(env) == "scalar")
        return scalar_kernels();
    if (const KernelTable* t = avx2_kernels()) return *t;
    return scalar_kernels();
}

}  // namespace codyad::kernels
