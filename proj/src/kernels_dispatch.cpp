#include "isac/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

namespace isac::kern {

bool avx2_available() {
#if defined(ISAC_HAVE_AVX2)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

namespace {

std::atomic<const Kernels*> g_override{nullptr};

const Kernels& pick_default() {
    if (const char* env = std::getenv("ISAC_SIM_KERNELS")) {
        if (std::strcmp(env, "scalar") == 0) return scalar();
#if defined(ISAC_HAVE_AVX2)
        if (std::strcmp(env, "avx2") == 0 && avx2_available()) return avx2();
#endif
    }
#if defined(ISAC_HAVE_AVX2)
    if (avx2_available()) return avx2();
#endif
    return scalar();
}

}  // namespace

const Kernels& active() {
    if (const Kernels* k = g_override.load(std::memory_order_acquire)) return *k;
    static const Kernels& chosen = pick_default();
    return chosen;
}

void set_active(const Kernels* k) {
    g_override.store(k, std::memory_order_release);
}

}  // namespace isac::kern
