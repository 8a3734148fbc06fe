// AVX2/FMA kernel variants. Two complex doubles per 256-bit vector,
// interleaved [re, im] as std::complex guarantees. Compiled with
// -mavx2 -mfma; only reached through the runtime dispatch table.

#include "isac/kernels.hpp"

#if defined(ISAC_HAVE_AVX2)

#include <immintrin.h>

#include <algorithm>
#include <cmath>

namespace isac::kern {

namespace {

// [ar, ai] * [br, bi] for both lanes: even = ar*br - ai*bi, odd = ai*br + ar*bi
inline __m256d cmul2(__m256d va, __m256d vb) {
    const __m256d bre = _mm256_movedup_pd(vb);
    const __m256d bim = _mm256_permute_pd(vb, 0xF);
    const __m256d aswap = _mm256_permute_pd(va, 0x5);
    return _mm256_fmaddsub_pd(va, bre, _mm256_mul_pd(aswap, bim));
}

// conj([ar, ai]) * [br, bi]: even = ar*br + ai*bi, odd = ar*bi - ai*br
inline __m256d cmul_conj2(__m256d va, __m256d vb) {
    const __m256d are = _mm256_movedup_pd(va);
    const __m256d aim = _mm256_permute_pd(va, 0xF);
    const __m256d bswap = _mm256_permute_pd(vb, 0x5);
    return _mm256_fmsubadd_pd(vb, are, _mm256_mul_pd(bswap, aim));
}

inline cplx hsum_c(__m256d acc) {
    const __m128d lo = _mm256_castpd256_pd128(acc);
    const __m128d hi = _mm256_extractf128_pd(acc, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    alignas(16) double out[2];
    _mm_store_pd(out, s);
    return {out[0], out[1]};
}

void cmul_avx2(const cplx* a, const cplx* b, cplx* dst, std::size_t n) {
    const double* pa = reinterpret_cast<const double*>(a);
    const double* pb = reinterpret_cast<const double*>(b);
    double* pd = reinterpret_cast<double*>(dst);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const __m256d va = _mm256_loadu_pd(pa + 2 * i);
        const __m256d vb = _mm256_loadu_pd(pb + 2 * i);
        _mm256_storeu_pd(pd + 2 * i, cmul2(va, vb));
    }
    for (; i < n; ++i) {
        const double ar = a[i].real(), ai = a[i].imag();
        const double br = b[i].real(), bi = b[i].imag();
        dst[i] = {ar * br - ai * bi, ar * bi + ai * br};
    }
}

void cmul_conj_avx2(const cplx* a, const cplx* b, cplx* dst, std::size_t n) {
    const double* pa = reinterpret_cast<const double*>(a);
    const double* pb = reinterpret_cast<const double*>(b);
    double* pd = reinterpret_cast<double*>(dst);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const __m256d va = _mm256_loadu_pd(pa + 2 * i);
        const __m256d vb = _mm256_loadu_pd(pb + 2 * i);
        _mm256_storeu_pd(pd + 2 * i, cmul_conj2(va, vb));
    }
    for (; i < n; ++i) {
        const double ar = a[i].real(), ai = a[i].imag();
        const double br = b[i].real(), bi = b[i].imag();
        dst[i] = {ar * br + ai * bi, ar * bi - ai * br};
    }
}

cplx dot_avx2(const cplx* a, const cplx* b, std::size_t n) {
    const double* pa = reinterpret_cast<const double*>(a);
    const double* pb = reinterpret_cast<const double*>(b);
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_add_pd(acc0, cmul2(_mm256_loadu_pd(pa + 2 * i),
                                         _mm256_loadu_pd(pb + 2 * i)));
        acc1 = _mm256_add_pd(acc1, cmul2(_mm256_loadu_pd(pa + 2 * i + 4),
                                         _mm256_loadu_pd(pb + 2 * i + 4)));
    }
    for (; i + 2 <= n; i += 2) {
        acc0 = _mm256_add_pd(acc0, cmul2(_mm256_loadu_pd(pa + 2 * i),
                                         _mm256_loadu_pd(pb + 2 * i)));
    }
    cplx out = hsum_c(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) {
        const double ar = a[i].real(), ai = a[i].imag();
        const double br = b[i].real(), bi = b[i].imag();
        out += cplx{ar * br - ai * bi, ar * bi + ai * br};
    }
    return out;
}

cplx dot_conj_avx2(const cplx* a, const cplx* b, std::size_t n) {
    const double* pa = reinterpret_cast<const double*>(a);
    const double* pb = reinterpret_cast<const double*>(b);
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_add_pd(acc0, cmul_conj2(_mm256_loadu_pd(pa + 2 * i),
                                              _mm256_loadu_pd(pb + 2 * i)));
        acc1 = _mm256_add_pd(acc1, cmul_conj2(_mm256_loadu_pd(pa + 2 * i + 4),
                                              _mm256_loadu_pd(pb + 2 * i + 4)));
    }
    for (; i + 2 <= n; i += 2) {
        acc0 = _mm256_add_pd(acc0, cmul_conj2(_mm256_loadu_pd(pa + 2 * i),
                                              _mm256_loadu_pd(pb + 2 * i)));
    }
    cplx out = hsum_c(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) {
        const double ar = a[i].real(), ai = a[i].imag();
        const double br = b[i].real(), bi = b[i].imag();
        out += cplx{ar * br + ai * bi, ar * bi - ai * br};
    }
    return out;
}

void axpy_avx2(cplx alpha, const cplx* x, cplx* y, std::size_t n) {
    const double* px = reinterpret_cast<const double*>(x);
    double* py = reinterpret_cast<double*>(y);
    const __m256d are = _mm256_set1_pd(alpha.real());
    const __m256d aim = _mm256_set1_pd(alpha.imag());
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const __m256d vx = _mm256_loadu_pd(px + 2 * i);
        const __m256d xswap = _mm256_permute_pd(vx, 0x5);
        const __m256d prod =
            _mm256_fmaddsub_pd(vx, are, _mm256_mul_pd(xswap, aim));
        _mm256_storeu_pd(py + 2 * i,
                         _mm256_add_pd(_mm256_loadu_pd(py + 2 * i), prod));
    }
    const double pr = alpha.real(), pi = alpha.imag();
    for (; i < n; ++i) {
        const double xr = x[i].real(), xi = x[i].imag();
        y[i] += cplx{pr * xr - pi * xi, pr * xi + pi * xr};
    }
}

void phase_ramp_avx2(double phase0, double step, cplx* dst, std::size_t n) {
    // 64-element resync blocks, matching the scalar reference's drift bound.
    constexpr std::size_t kResync = 64;
    double* pd = reinterpret_cast<double*>(dst);
    const double c2 = std::cos(2.0 * step), s2 = std::sin(2.0 * step);
    const __m256d rot = _mm256_setr_pd(c2, s2, c2, s2);
    std::size_t i = 0;
    while (i + 2 <= n) {
        const std::size_t block_end = std::min(i + kResync, n);
        const double p0 = phase0 + static_cast<double>(i) * step;
        __m256d cur = _mm256_setr_pd(std::cos(p0), std::sin(p0),
                                     std::cos(p0 + step), std::sin(p0 + step));
        for (; i + 2 <= block_end; i += 2) {
            _mm256_storeu_pd(pd + 2 * i, cur);
            cur = cmul2(cur, rot);
        }
    }
    for (; i < n; ++i) {
        const double ph = phase0 + static_cast<double>(i) * step;
        dst[i] = {std::cos(ph), std::sin(ph)};
    }
}

double norm_sq_avx2(const cplx* x, std::size_t n) {
    const double* px = reinterpret_cast<const double*>(x);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const __m256d v = _mm256_loadu_pd(px + 2 * i);
        acc = _mm256_fmadd_pd(v, v, acc);
    }
    const __m128d lo = _mm256_castpd256_pd128(acc);
    const __m128d hi = _mm256_extractf128_pd(acc, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    double out = _mm_cvtsd_f64(_mm_hadd_pd(s, s));
    for (; i < n; ++i) {
        out += x[i].real() * x[i].real() + x[i].imag() * x[i].imag();
    }
    return out;
}

}  // namespace

const Kernels& avx2() {
    static const Kernels table{
        "avx2",        cmul_avx2, cmul_conj_avx2,  dot_avx2,
        dot_conj_avx2, axpy_avx2, phase_ramp_avx2, norm_sq_avx2,
    };
    return table;
}

}  // namespace isac::kern

#endif  // ISAC_HAVE_AVX2
