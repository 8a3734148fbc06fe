#pragma once
// Active-sensing parameter estimation: sequential delay-Doppler correlation
// search with interference cancellation and least-squares gain estimation.
//
// The search runs in the time domain. With s = (F_N^H kron I) d and
// r = (F_N^H kron I) y, the correlation of T(l,k)d against y reduces to
//   corr(l, k) = sum_m conj(s[m]) r[(m+l) mod MN] exp(-j*2*pi*k*m/(M*N)),
// which costs one M*N-length pass per (l, k) candidate.

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "isac/modem.hpp"

namespace isac {

struct SearchGrid {
    std::vector<long> delay_candidates;      // samples, sorted unique
    std::vector<double> doppler_candidates;  // bins, sorted unique, fractional ok
    bool refine_doppler = true;              // parabolic sub-bin interpolation
    std::vector<long> excluded_delays;       // known direct-path bins to notch

    void validate(std::size_t grid_size) const;
    std::size_t cardinality() const;  // usable (delay, Doppler) pairs
};

// Uniform candidates around zero Doppler and [0, max_delay].
SearchGrid make_search_grid(long max_delay, double doppler_span,
                            double doppler_step, bool refine = true);

struct PathEstimate {
    long delay_idx = 0;
    double doppler_idx = 0.0;
    cplx gain{0.0, 0.0};
    double peak = 0.0;  // |correlation|^2 at detection time
};

struct EstimateOptions {
    bool refine_gains = true;  // joint least-squares gain refit on the found supports
};

struct EstimateResult {
    std::vector<PathEstimate> paths;  // in detection order
    bool early_stop = false;          // residual exhausted before P paths
    unsigned long long ops = 0;       // complex MAC count (complexity guard)
};

EstimateResult estimate_paths(std::span<const cplx> y, std::span<const cplx> d,
                              int n_paths, const SearchGrid& grid,
                              const Modem& modem,
                              const EstimateOptions& opts = {});

// Least-squares projection of the residual onto T(l, k) d.
cplx estimate_gain(std::span<const cplx> y_residual, std::span<const cplx> d,
                   long delay_idx, double doppler_idx, const Modem& modem);

}  // namespace isac
