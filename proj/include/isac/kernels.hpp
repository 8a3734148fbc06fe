#pragma once
// Data-parallel complex kernels used by the modem, channel and correlation
// search inner loops. A scalar reference implementation is always available;
// an AVX2/FMA variant is selected at runtime when the CPU supports it.

#include <complex>
#include <cstddef>

namespace isac::kern {

using cplx = std::complex<double>;

struct Kernels {
    const char* name;

    // dst[i] = a[i] * b[i]
    void (*cmul)(const cplx* a, const cplx* b, cplx* dst, std::size_t n);
    // dst[i] = conj(a[i]) * b[i]
    void (*cmul_conj)(const cplx* a, const cplx* b, cplx* dst, std::size_t n);
    // sum_i a[i] * b[i]
    cplx (*dot)(const cplx* a, const cplx* b, std::size_t n);
    // sum_i conj(a[i]) * b[i]
    cplx (*dot_conj)(const cplx* a, const cplx* b, std::size_t n);
    // y[i] += alpha * x[i]
    void (*axpy)(cplx alpha, const cplx* x, cplx* y, std::size_t n);
    // dst[i] = exp(j * (phase0 + i * step))
    void (*phase_ramp)(double phase0, double step, cplx* dst, std::size_t n);
    // sum_i |x[i]|^2
    double (*norm_sq)(const cplx* x, std::size_t n);
};

const Kernels& scalar();

#if defined(ISAC_HAVE_AVX2)
const Kernels& avx2();
#endif

// True when an AVX2 table exists and the CPU can run it.
bool avx2_available();

// Active table. Defaults to AVX2 when available, scalar otherwise; the
// environment variable ISAC_SIM_KERNELS=scalar|avx2 overrides the choice.
const Kernels& active();

// Test hook: replace the active table (pass nullptr to restore the default).
void set_active(const Kernels* k);

}  // namespace isac::kern
