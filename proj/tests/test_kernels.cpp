#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "isac/kernels.hpp"
#include "isac/rng.hpp"

using isac::Rng;
using isac::kern::cplx;

namespace {

std::vector<cplx> random_vec(std::size_t n, Rng& rng) {
    std::vector<cplx> v(n);
    for (auto& x : v) x = rng.cgauss(1.0);
    return v;
}

}  // namespace

TEST_CASE("scalar kernel semantics") {
    const auto& k = isac::kern::scalar();
    Rng rng(42);
    const std::size_t n = 257;  // odd length exercises remainders elsewhere
    const auto a = random_vec(n, rng);
    const auto b = random_vec(n, rng);

    std::vector<cplx> prod(n);
    k.cmul(a.data(), b.data(), prod.data(), n);
    for (std::size_t i = 0; i < n; i += 61)
        CHECK(std::abs(prod[i] - a[i] * b[i]) < 1e-14);

    k.cmul_conj(a.data(), b.data(), prod.data(), n);
    for (std::size_t i = 0; i < n; i += 61)
        CHECK(std::abs(prod[i] - std::conj(a[i]) * b[i]) < 1e-14);

    // dot_conj(x, x) is the squared norm
    const cplx self = k.dot_conj(a.data(), a.data(), n);
    CHECK(self.real() == doctest::Approx(k.norm_sq(a.data(), n)).epsilon(1e-13));
    CHECK(std::abs(self.imag()) < 1e-10);

    // axpy against the direct loop
    std::vector<cplx> y = b;
    const cplx alpha{0.3, -1.2};
    k.axpy(alpha, a.data(), y.data(), n);
    for (std::size_t i = 0; i < n; i += 61)
        CHECK(std::abs(y[i] - (b[i] + alpha * a[i])) < 1e-14);
}

TEST_CASE("phase ramp magnitude and drift") {
    const auto& k = isac::kern::scalar();
    const std::size_t n = 4096;
    std::vector<cplx> ramp(n);
    const double step = 2.0 * std::numbers::pi * 0.37 / 4096.0;
    k.phase_ramp(0.2, step, ramp.data(), n);
    double worst = 0.0;
    for (std::size_t i = 0; i < n; i += 17) {
        const cplx exact = std::polar(1.0, 0.2 + step * static_cast<double>(i));
        worst = std::max(worst, std::abs(ramp[i] - exact));
    }
    CHECK(worst < 1e-12);
}

#if defined(ISAC_HAVE_AVX2)
TEST_CASE("avx2 kernels match the scalar reference") {
    if (!isac::kern::avx2_available()) return;
    const auto& s = isac::kern::scalar();
    const auto& v = isac::kern::avx2();
    Rng rng(7);

    for (std::size_t n : {1u, 2u, 3u, 8u, 255u, 1024u, 4097u}) {
        const auto a = random_vec(n, rng);
        const auto b = random_vec(n, rng);

        std::vector<cplx> ps(n), pv(n);
        s.cmul(a.data(), b.data(), ps.data(), n);
        v.cmul(a.data(), b.data(), pv.data(), n);
        for (std::size_t i = 0; i < n; ++i)
            CHECK(std::abs(ps[i] - pv[i]) < 1e-13);

        s.cmul_conj(a.data(), b.data(), ps.data(), n);
        v.cmul_conj(a.data(), b.data(), pv.data(), n);
        for (std::size_t i = 0; i < n; ++i)
            CHECK(std::abs(ps[i] - pv[i]) < 1e-13);

        const double scale = std::max(1.0, std::sqrt(static_cast<double>(n)));
        CHECK(std::abs(s.dot(a.data(), b.data(), n) -
                       v.dot(a.data(), b.data(), n)) < 1e-12 * scale);
        CHECK(std::abs(s.dot_conj(a.data(), b.data(), n) -
                       v.dot_conj(a.data(), b.data(), n)) < 1e-12 * scale);
        CHECK(s.norm_sq(a.data(), n) ==
              doctest::Approx(v.norm_sq(a.data(), n)).epsilon(1e-12));

        std::vector<cplx> ys = b, yv = b;
        const cplx alpha{-0.7, 0.4};
        s.axpy(alpha, a.data(), ys.data(), n);
        v.axpy(alpha, a.data(), yv.data(), n);
        for (std::size_t i = 0; i < n; ++i)
            CHECK(std::abs(ys[i] - yv[i]) < 1e-13);

        std::vector<cplx> rs(n), rv(n);
        s.phase_ramp(0.1, 0.013, rs.data(), n);
        v.phase_ramp(0.1, 0.013, rv.data(), n);
        for (std::size_t i = 0; i < n; ++i)
            CHECK(std::abs(rs[i] - rv[i]) < 1e-12);
    }
}
#endif

TEST_CASE("rng determinism and moments") {
    Rng a(123), b(123);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    Rng rng(99);
    const int n = 200000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        sum += x;
        sum2 += x * x;
    }
    CHECK(std::abs(sum / n) < 0.02);
    CHECK(sum2 / n == doctest::Approx(1.0).epsilon(0.02));

    // complex gaussian variance
    double cvar = 0.0;
    for (int i = 0; i < n; ++i) cvar += std::norm(rng.cgauss(2.0));
    CHECK(cvar / n == doctest::Approx(2.0).epsilon(0.03));
}

TEST_CASE("derived seeds differ across counters") {
    const auto s0 = isac::derive_seed(1, 0, 0, 0, 0);
    CHECK(isac::derive_seed(1, 1, 0, 0, 0) != s0);
    CHECK(isac::derive_seed(1, 0, 1, 0, 0) != s0);
    CHECK(isac::derive_seed(1, 0, 0, 1, 0) != s0);
    CHECK(isac::derive_seed(1, 0, 0, 0, 1) != s0);
    CHECK(isac::derive_seed(2, 0, 0, 0, 0) != s0);
}

TEST_CASE("dispatch override") {
    isac::kern::set_active(&isac::kern::scalar());
    CHECK(std::string(isac::kern::active().name) == "scalar");
    isac::kern::set_active(nullptr);
}
