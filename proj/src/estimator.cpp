#include "isac/estimator.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "isac/errors.hpp"

namespace isac {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// g[m] = conj(s[m]) * r[(m + l) mod total]
void build_lag_product(const kern::Kernels& k, const cplx* s, const cplx* r,
                       cplx* g, std::size_t total, long l) {
    const std::size_t shift = static_cast<std::size_t>(l);
    k.cmul_conj(s, r + shift, g, total - shift);
    k.cmul_conj(s + (total - shift), r, g + (total - shift), shift);
}

// u[(m + l) mod total] = ramp[m] * s[m],   ramp[m] = exp(+j*2*pi*k*m/total)
void build_atom(const kern::Kernels& k, const cplx* s, const cplx* ramp,
                cplx* scratch, cplx* u, std::size_t total, long l) {
    k.cmul(ramp, s, scratch, total);
    cyclic_shift(scratch, u, total, l);
}

struct Peak {
    std::size_t delay_pos = 0;
    std::size_t doppler_pos = 0;
    double score = -1.0;
    cplx corr{0.0, 0.0};
};

}  // namespace

void SearchGrid::validate(std::size_t grid_size) const {
    if (delay_candidates.empty() || doppler_candidates.empty())
        throw ConfigError("search grid must have at least one candidate per axis");
    if (!std::is_sorted(delay_candidates.begin(), delay_candidates.end()) ||
        std::adjacent_find(delay_candidates.begin(), delay_candidates.end()) !=
            delay_candidates.end())
        throw ConfigError("delay candidates must be sorted and unique");
    if (!std::is_sorted(doppler_candidates.begin(), doppler_candidates.end()) ||
        std::adjacent_find(doppler_candidates.begin(), doppler_candidates.end()) !=
            doppler_candidates.end())
        throw ConfigError("Doppler candidates must be sorted and unique");
    const long total = static_cast<long>(grid_size);
    for (long l : delay_candidates)
        if (l < 0 || l >= total)
            throw ConfigError("delay candidate outside [0, M*N)");
    for (double k : doppler_candidates)
        if (std::abs(k) >= static_cast<double>(total))
            throw ConfigError("Doppler candidate outside (-M*N, M*N)");
}

std::size_t SearchGrid::cardinality() const {
    std::size_t usable = 0;
    for (long l : delay_candidates) {
        if (std::find(excluded_delays.begin(), excluded_delays.end(), l) ==
            excluded_delays.end())
            ++usable;
    }
    return usable * doppler_candidates.size();
}

SearchGrid make_search_grid(long max_delay, double doppler_span,
                            double doppler_step, bool refine) {
    if (max_delay < 0 || doppler_span < 0.0 || doppler_step <= 0.0)
        throw ConfigError("invalid search grid parameters");
    SearchGrid g;
    g.refine_doppler = refine;
    g.delay_candidates.resize(static_cast<std::size_t>(max_delay) + 1);
    for (long l = 0; l <= max_delay; ++l) g.delay_candidates[l] = l;
    const long half = std::lround(doppler_span / doppler_step);
    for (long i = -half; i <= half; ++i)
        g.doppler_candidates.push_back(static_cast<double>(i) * doppler_step);
    return g;
}

EstimateResult estimate_paths(std::span<const cplx> y, std::span<const cplx> d,
                              int n_paths, const SearchGrid& grid,
                              const Modem& modem, const EstimateOptions& opts) {
    const std::size_t total = modem.dim();
    if (y.size() != total || d.size() != total)
        throw ConfigError("estimate_paths: vector length != M*N");
    grid.validate(total);
    if (n_paths < 1) throw ConfigError("path count must be >= 1");
    if (static_cast<std::size_t>(n_paths) > grid.cardinality())
        throw ConfigError("path count exceeds search grid cardinality");

    const auto& k = kern::active();
    std::vector<cplx> s(total), r(total);
    modem.modulate_into(d.data(), s.data());
    modem.modulate_into(y.data(), r.data());

    const double s_energy = k.norm_sq(s.data(), total);
    if (s_energy <= 0.0) throw InputError("reference vector has zero energy");

    // Candidate ramps carry the conjugated Doppler phase; shared across delays
    // and interference-cancellation rounds.
    const std::size_t n_dopp = grid.doppler_candidates.size();
    std::vector<std::vector<cplx>> ramps(n_dopp);
    for (std::size_t i = 0; i < n_dopp; ++i) {
        ramps[i].resize(total);
        k.phase_ramp(0.0,
                     -kTwoPi * grid.doppler_candidates[i] / static_cast<double>(total),
                     ramps[i].data(), total);
    }

    const double initial_energy = k.norm_sq(r.data(), total);
    const double floor_energy = 1e-20 * std::max(initial_energy, 1e-300);

    EstimateResult result;
    std::vector<cplx> g(total), scratch(total), atom(total), ramp(total);

    for (int p = 0; p < n_paths; ++p) {
        if (k.norm_sq(r.data(), total) <= floor_energy) {
            result.early_stop = true;
            break;
        }

        Peak best;
        for (std::size_t di = 0; di < grid.delay_candidates.size(); ++di) {
            const long l = grid.delay_candidates[di];
            if (std::find(grid.excluded_delays.begin(), grid.excluded_delays.end(),
                          l) != grid.excluded_delays.end())
                continue;
            build_lag_product(k, s.data(), r.data(), g.data(), total, l);
            result.ops += total;
            for (std::size_t ki = 0; ki < n_dopp; ++ki) {
                const cplx c = k.dot(ramps[ki].data(), g.data(), total);
                result.ops += total;
                const double score = std::norm(c);
                if (score > best.score) {
                    best = Peak{di, ki, score, c};
                }
            }
        }

        const long l_hat = grid.delay_candidates[best.delay_pos];
        double k_hat = grid.doppler_candidates[best.doppler_pos];
        cplx corr = best.corr;

        // Sub-bin Doppler: parabolic vertex through the peak and its two
        // neighbours (uniform local spacing required).
        if (grid.refine_doppler && best.doppler_pos > 0 &&
            best.doppler_pos + 1 < n_dopp) {
            const double km1 = grid.doppler_candidates[best.doppler_pos - 1];
            const double kp1 = grid.doppler_candidates[best.doppler_pos + 1];
            const double h = kp1 - k_hat;
            if (std::abs((k_hat - km1) - h) < 1e-9) {
                build_lag_product(k, s.data(), r.data(), g.data(), total, l_hat);
                const double sm1 =
                    std::norm(k.dot(ramps[best.doppler_pos - 1].data(), g.data(), total));
                const double sp1 =
                    std::norm(k.dot(ramps[best.doppler_pos + 1].data(), g.data(), total));
                result.ops += 3 * total;
                const double denom = sm1 - 2.0 * best.score + sp1;
                if (denom < 0.0) {
                    const double delta = 0.5 * (sm1 - sp1) / denom;
                    k_hat += delta * h;
                    k.phase_ramp(0.0, -kTwoPi * k_hat / static_cast<double>(total),
                                 ramp.data(), total);
                    corr = k.dot(ramp.data(), g.data(), total);
                    result.ops += 2 * total;
                }
            }
        }

        const cplx gain = corr / s_energy;

        PathEstimate est;
        est.delay_idx = l_hat;
        est.doppler_idx = k_hat;
        est.gain = gain;
        est.peak = std::norm(corr);
        result.paths.push_back(est);

        // Interference cancellation: subtract the reconstructed contribution.
        k.phase_ramp(0.0, kTwoPi * k_hat / static_cast<double>(total),
                     ramp.data(), total);
        build_atom(k, s.data(), ramp.data(), scratch.data(), atom.data(), total,
                   l_hat);
        k.axpy(-gain, atom.data(), r.data(), total);
        result.ops += 2 * total;
    }

    // Joint least-squares gain refit on the detected supports removes the
    // residual cross-path leakage of the sequential pass.
    if (opts.refine_gains && result.paths.size() > 1) {
        const std::size_t np = result.paths.size();
        std::vector<std::vector<cplx>> atoms(np, std::vector<cplx>(total));
        std::vector<cplx> r0(total);
        modem.modulate_into(y.data(), r0.data());
        for (std::size_t p = 0; p < np; ++p) {
            k.phase_ramp(0.0,
                         kTwoPi * result.paths[p].doppler_idx / static_cast<double>(total),
                         ramp.data(), total);
            build_atom(k, s.data(), ramp.data(), scratch.data(), atoms[p].data(),
                       total, result.paths[p].delay_idx);
        }
        Eigen::MatrixXcd gram(np, np);
        Eigen::VectorXcd rhs(np);
        for (std::size_t a = 0; a < np; ++a) {
            rhs(a) = k.dot_conj(atoms[a].data(), r0.data(), total);
            for (std::size_t b = 0; b < np; ++b)
                gram(a, b) = k.dot_conj(atoms[a].data(), atoms[b].data(), total);
        }
        gram.diagonal().array() += 1e-12 * s_energy;
        const Eigen::VectorXcd h = gram.ldlt().solve(rhs);
        if (h.allFinite()) {
            for (std::size_t p = 0; p < np; ++p) result.paths[p].gain = h(p);
        }
        result.ops += (np + 1) * np * total;
    }

    return result;
}

cplx estimate_gain(std::span<const cplx> y_residual, std::span<const cplx> d,
                   long delay_idx, double doppler_idx, const Modem& modem) {
    const std::size_t total = modem.dim();
    if (y_residual.size() != total || d.size() != total)
        throw ConfigError("estimate_gain: vector length != M*N");
    if (delay_idx < 0 || delay_idx >= static_cast<long>(total))
        throw ConfigError("estimate_gain: delay outside [0, M*N)");

    const auto& k = kern::active();
    std::vector<cplx> s(total), r(total), ramp(total), scratch(total), atom(total);
    modem.modulate_into(d.data(), s.data());
    const double s_energy = k.norm_sq(s.data(), total);
    if (s_energy <= 0.0) throw InputError("reference vector has zero energy");

    modem.modulate_into(y_residual.data(), r.data());
    k.phase_ramp(0.0, kTwoPi * doppler_idx / static_cast<double>(total),
                 ramp.data(), total);
    build_atom(k, s.data(), ramp.data(), scratch.data(), atom.data(), total,
               delay_idx);
    return k.dot_conj(atom.data(), r.data(), total) / s_energy;
}

}  // namespace isac
