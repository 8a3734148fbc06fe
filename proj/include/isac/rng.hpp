#pragma once
// Self-contained xoshiro256++ generator. Simulation results must be
// reproducible from a single master seed, so we avoid the
// implementation-defined std distributions and derive per-stream seeds with
// a fixed counter scheme.

#include <cmath>
#include <complex>
#include <cstdint>

namespace isac {

inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Stream seed from a master seed and up to four counters (scheme index, SNR
// index, target-count index, trial index in the harness).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t c0 = 0,
                                 std::uint64_t c1 = 0, std::uint64_t c2 = 0,
                                 std::uint64_t c3 = 0) {
    std::uint64_t s = mix64(master);
    s = mix64(s ^ (c0 + 0xD1B54A32D192ED03ULL));
    s = mix64(s ^ (c1 + 0x8CB92BA72F3D8DD7ULL));
    s = mix64(s ^ (c2 + 0x2545F4914F6CDD1DULL));
    s = mix64(s ^ (c3 + 0x9E6C63D0876A9A35ULL));
    return s;
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& w : state_) {
            sm = mix64(sm);
            w = sm;
        }
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // [0, 1)
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal, Marsaglia polar method.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        have_spare_ = true;
        return u * m;
    }

    // Circularly symmetric complex Gaussian with E|z|^2 = var.
    std::complex<double> cgauss(double var) {
        const double sd = std::sqrt(0.5 * var);
        return {sd * normal(), sd * normal()};
    }

    // Unit-magnitude complex number with uniform phase.
    std::complex<double> unit_phase() {
        const double ph = uniform(0.0, 2.0 * 3.14159265358979323846);
        return {std::cos(ph), std::sin(ph)};
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t state_[4];
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace isac
