// Scalar reference kernels. These define the semantics the SIMD variants are
// tested against; keep them simple and obviously correct.

#include "isac/kernels.hpp"

#include <cmath>

namespace isac::kern {

namespace {

void cmul_scalar(const cplx* a, const cplx* b, cplx* dst, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const double ar = a[i].real(), ai = a[i].imag();
        const double br = b[i].real(), bi = b[i].imag();
        dst[i] = {ar * br - ai * bi, ar * bi + ai * br};
    }
}

void cmul_conj_scalar(const cplx* a, const cplx* b, cplx* dst, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const double ar = a[i].real(), ai = a[i].imag();
        const double br = b[i].real(), bi = b[i].imag();
        dst[i] = {ar * br + ai * bi, ar * bi - ai * br};
    }
}

cplx dot_scalar(const cplx* a, const cplx* b, std::size_t n) {
    double re = 0.0, im = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ar = a[i].real(), ai = a[i].imag();
        const double br = b[i].real(), bi = b[i].imag();
        re += ar * br - ai * bi;
        im += ar * bi + ai * br;
    }
    return {re, im};
}

cplx dot_conj_scalar(const cplx* a, const cplx* b, std::size_t n) {
    double re = 0.0, im = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ar = a[i].real(), ai = a[i].imag();
        const double br = b[i].real(), bi = b[i].imag();
        re += ar * br + ai * bi;
        im += ar * bi - ai * br;
    }
    return {re, im};
}

void axpy_scalar(cplx alpha, const cplx* x, cplx* y, std::size_t n) {
    const double pr = alpha.real(), pi = alpha.imag();
    for (std::size_t i = 0; i < n; ++i) {
        const double xr = x[i].real(), xi = x[i].imag();
        y[i] += cplx{pr * xr - pi * xi, pr * xi + pi * xr};
    }
}

// Rotation recurrence with periodic exact resync so the drift stays at a few
// ulps regardless of n.
void phase_ramp_scalar(double phase0, double step, cplx* dst, std::size_t n) {
    constexpr std::size_t kResync = 64;
    const cplx rot{std::cos(step), std::sin(step)};
    cplx cur;
    for (std::size_t i = 0; i < n; ++i) {
        if (i % kResync == 0) {
            const double ph = phase0 + static_cast<double>(i) * step;
            cur = {std::cos(ph), std::sin(ph)};
        }
        dst[i] = cur;
        cur *= rot;
    }
}

double norm_sq_scalar(const cplx* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += x[i].real() * x[i].real() + x[i].imag() * x[i].imag();
    }
    return acc;
}

}  // namespace

const Kernels& scalar() {
    static const Kernels table{
        "scalar",    cmul_scalar, cmul_conj_scalar,  dot_scalar,
        dot_conj_scalar, axpy_scalar, phase_ramp_scalar, norm_sq_scalar,
    };
    return table;
}

}  // namespace isac::kern
