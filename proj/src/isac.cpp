#include "isac/isac.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "isac/errors.hpp"
#include "isac/rng.hpp"
#include "isac/tracker.hpp"

namespace isac {

EstimateResult coarse_channel_estimate(std::span<const cplx> y,
                                       const DDFrame& pilot, int n_paths,
                                       const SearchGrid& grid,
                                       const Modem& modem) {
    if (pilot.pilot_power <= 0.0)
        throw InputError("coarse estimate needs nonzero pilot power");
    const auto d_p = pilot.pilot_only();
    return estimate_paths(y, d_p, n_paths, grid, modem);
}

Eigen::VectorXcd mmse_detect(const Eigen::VectorXcd& y,
                             const Eigen::MatrixXcd& h, double mu) {
    if (h.rows() != y.size()) throw ConfigError("mmse_detect: shape mismatch");
    if (mu <= 0.0) throw ConfigError("mmse_detect: mu must be positive");
    Eigen::MatrixXcd a = h.adjoint() * h;
    a.diagonal().array() += mu;
    return a.llt().solve(h.adjoint() * y);
}

namespace {

// Rayleigh-quotient power iteration on H^H H with a deterministic start.
template <typename ApplyG>
double power_iteration(std::size_t n, ApplyG&& apply_g, int iters) {
    Rng rng(0x9d5a1f2bc3e47ULL);
    std::vector<cplx> v(n), w(n);
    for (auto& x : v) x = rng.cgauss(1.0);
    double lambda = 0.0;
    for (int it = 0; it < iters; ++it) {
        apply_g(v.data(), w.data());
        double nrm = std::sqrt(kern::active().norm_sq(w.data(), n));
        if (nrm <= 0.0) return 0.0;
        lambda = nrm;  // ||G v|| with ||v|| = 1 converges to lambda_max
        for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / nrm;
    }
    return lambda;
}

}  // namespace

double op_norm_sq_estimate(const DDChannelOp& op, int iters) {
    const std::size_t n = op.dim();
    std::vector<cplx> mid(n);
    const double lam = power_iteration(
        n,
        [&](const cplx* in, cplx* out) {
            op.apply(in, mid.data());
            op.apply_adjoint(mid.data(), out);
        },
        iters);
    // The l1 gain bound is exact enough to cap any power-iteration overshoot.
    const double ub = op.gain_l1() * op.gain_l1();
    return std::min(1.05 * lam, ub);
}

double op_norm_sq_estimate(const Eigen::MatrixXcd& h, int iters) {
    const std::size_t n = static_cast<std::size_t>(h.cols());
    Eigen::VectorXcd mid(h.rows());
    const double lam = power_iteration(
        n,
        [&](const cplx* in, cplx* out) {
            Eigen::Map<const Eigen::VectorXcd> vin(in, h.cols());
            mid = h * vin;
            Eigen::Map<Eigen::VectorXcd> vout(out, h.cols());
            vout = h.adjoint() * mid;
        },
        iters);
    return 1.05 * lam;
}

namespace {

template <typename Op>
std::vector<cplx> gradient_detect_impl(std::span<const cplx> y, const Op& op,
                                       std::size_t dim, double lambda_max,
                                       const IsacConfig& cfg,
                                       std::span<const cplx> d_init,
                                       GradientStats* stats) {
    if (y.size() != dim) throw ConfigError("gradient_detect: shape mismatch");
    const double mu = cfg.mu;
    if (mu <= 0.0) throw ConfigError("gradient_detect: mu must be positive");
    const double eta = cfg.eta > 0.0 ? cfg.eta : 0.9 / (lambda_max + mu);

    const auto& k = kern::active();
    std::vector<cplx> d(dim, cplx{0.0, 0.0});
    if (!d_init.empty()) {
        if (d_init.size() != dim)
            throw ConfigError("gradient_detect: init length mismatch");
        std::copy(d_init.begin(), d_init.end(), d.begin());
    }

    std::vector<cplx> hd(dim), grad(dim), resid(dim);
    double prev_obj = std::numeric_limits<double>::infinity();
    int rising = 0;
    int it = 0;
    bool converged = false;

    for (; it < cfg.max_inner; ++it) {
        op.apply(d.data(), hd.data());
        for (std::size_t i = 0; i < dim; ++i) resid[i] = hd[i] - y[i];
        const double obj = k.norm_sq(resid.data(), dim) +
                           mu * k.norm_sq(d.data(), dim);
        if (obj > prev_obj * (1.0 + 1e-12)) {
            if (++rising >= 5)
                throw NumericError("gradient_detect diverged; step size too large");
        } else {
            rising = 0;
        }
        prev_obj = obj;

        // grad = H^H (H d - y) + mu d = nabla_J / 2
        op.apply_adjoint(resid.data(), grad.data());
        k.axpy(cplx{mu, 0.0}, d.data(), grad.data(), dim);
        double step_sq = 0.0;
        const double scale = 2.0 * eta;
        for (std::size_t i = 0; i < dim; ++i) {
            const cplx delta = scale * grad[i];
            d[i] -= delta;
            step_sq += std::norm(delta);
        }
        if (std::sqrt(step_sq) < cfg.eps_inner) {
            ++it;
            converged = true;
            break;
        }
    }

    if (stats) {
        stats->iterations = it;
        stats->converged = converged;
    }
    return d;
}

struct DenseOpAdapter {
    const Eigen::MatrixXcd& h;
    void apply(const cplx* in, cplx* out) const {
        Eigen::Map<const Eigen::VectorXcd> vin(in, h.cols());
        Eigen::Map<Eigen::VectorXcd> vout(out, h.rows());
        vout = h * vin;
    }
    void apply_adjoint(const cplx* in, cplx* out) const {
        Eigen::Map<const Eigen::VectorXcd> vin(in, h.rows());
        Eigen::Map<Eigen::VectorXcd> vout(out, h.cols());
        vout = h.adjoint() * vin;
    }
};

}  // namespace

std::vector<cplx> gradient_detect(std::span<const cplx> y, const DDChannelOp& h,
                                  const IsacConfig& cfg,
                                  std::span<const cplx> d_init,
                                  GradientStats* stats) {
    return gradient_detect_impl(y, h, h.dim(), op_norm_sq_estimate(h), cfg,
                                d_init, stats);
}

std::vector<cplx> gradient_detect(std::span<const cplx> y,
                                  const Eigen::MatrixXcd& h,
                                  const IsacConfig& cfg,
                                  std::span<const cplx> d_init,
                                  GradientStats* stats) {
    if (h.rows() != h.cols())
        throw ConfigError("gradient_detect expects a square system");
    const DenseOpAdapter op{h};
    return gradient_detect_impl(y, op, static_cast<std::size_t>(h.cols()),
                                op_norm_sq_estimate(h), cfg, d_init, stats);
}

std::vector<cplx> demodulate_info(std::span<const cplx> d_hat,
                                  const DDFrame& pilot, int modulation_order) {
    const std::size_t total = static_cast<std::size_t>(pilot.M) * pilot.N;
    if (d_hat.size() != total)
        throw ConfigError("demodulate_info: shape mismatch");
    std::vector<cplx> info(d_hat.begin(), d_hat.end());
    info[static_cast<std::size_t>(pilot.pilot_k) * pilot.M + pilot.pilot_l] -=
        pilot.pilot_amplitude();
    for (auto& x : info) x = qam_nearest(x, modulation_order);
    return info;
}

double bit_error_rate(std::span<const cplx> a, std::span<const cplx> b,
                      int modulation_order) {
    if (a.size() != b.size()) throw ConfigError("bit_error_rate: size mismatch");
    const auto bits_a = qam_demap(a, modulation_order);
    const auto bits_b = qam_demap(b, modulation_order);
    std::size_t errors = 0;
    for (std::size_t i = 0; i < bits_a.size(); ++i)
        if (bits_a[i] != bits_b[i]) ++errors;
    return static_cast<double>(errors) / static_cast<double>(bits_a.size());
}

namespace {

double frame_mean_power(const DDFrame& pilot) {
    // Unit-average data symbols plus the superimposed pilot.
    return 1.0 + pilot.pilot_power;
}

// ||y - sum_q h_q T_q d_ref||
double reconstruction_residual(std::span<const cplx> y,
                               const std::vector<PathEstimate>& paths,
                               std::span<const cplx> d_ref, const Modem& modem) {
    std::vector<ChannelPath> cps;
    cps.reserve(paths.size());
    for (const auto& p : paths) {
        ChannelPath cp;
        cp.gain = p.gain;
        cp.delay_idx = p.delay_idx;
        cp.doppler_idx = p.doppler_idx;
        cps.push_back(cp);
    }
    const DDChannelOp op(std::move(cps), modem.config());
    std::vector<cplx> model(y.size());
    op.apply(d_ref.data(), model.data());
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) acc += std::norm(y[i] - model[i]);
    return std::sqrt(acc);
}

bool channel_converged(std::vector<PathEstimate> a, std::vector<PathEstimate> b,
                       const IsacConfig& cfg) {
    if (a.size() != b.size()) return false;
    const auto key = [](const PathEstimate& p) {
        return std::make_pair(p.delay_idx, p.doppler_idx);
    };
    std::sort(a.begin(), a.end(),
              [&](const auto& x, const auto& y) { return key(x) < key(y); });
    std::sort(b.begin(), b.end(),
              [&](const auto& x, const auto& y) { return key(x) < key(y); });
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::abs(a[i].delay_idx - b[i].delay_idx) > cfg.eps_outer_delay)
            return false;
        if (std::abs(a[i].doppler_idx - b[i].doppler_idx) > cfg.eps_outer_doppler)
            return false;
        const double ref = std::max(std::abs(b[i].gain), 1e-12);
        if (std::abs(a[i].gain - b[i].gain) / ref > cfg.eps_outer_gain)
            return false;
    }
    return true;
}

std::vector<ChannelPath> to_channel_paths(const std::vector<PathEstimate>& ps) {
    std::vector<ChannelPath> out;
    out.reserve(ps.size());
    for (const auto& p : ps) {
        ChannelPath cp;
        cp.gain = p.gain;
        cp.delay_idx = p.delay_idx;
        cp.doppler_idx = p.doppler_idx;
        out.push_back(cp);
    }
    return out;
}

}  // namespace

IsacReceiverResult isac_receiver_loop(std::span<const cplx> y,
                                      const DDFrame& pilot, int n_paths,
                                      const SearchGrid& grid, const Modem& modem,
                                      const IsacConfig& cfg, double noise_var,
                                      const std::vector<cplx>* true_data) {
    const std::size_t total = modem.dim();
    if (y.size() != total) throw ConfigError("isac loop: length mismatch");

    IsacConfig eff = cfg;
    if (eff.mu <= 0.0) {
        eff.mu = std::max(noise_var / frame_mean_power(pilot), 1e-6);
    }

    const auto d_pilot = pilot.pilot_only();
    IsacReceiverResult result;

    auto est = coarse_channel_estimate(y, pilot, n_paths, grid, modem);
    double accepted_residual = std::numeric_limits<double>::infinity();

    Eigen::VectorXcd y_vec(static_cast<Eigen::Index>(total));
    for (std::size_t i = 0; i < total; ++i) y_vec(static_cast<Eigen::Index>(i)) = y[i];

    std::vector<cplx> d_hat;
    for (int outer = 0; outer < eff.max_outer; ++outer) {
        const DDChannelOp h(to_channel_paths(est.paths), modem.config());

        // Detect with the current channel estimate.
        if (total <= eff.mmse_max_dim) {
            const Eigen::VectorXcd d = mmse_detect(y_vec, h.dense(), eff.mu);
            d_hat.assign(d.data(), d.data() + d.size());
        } else {
            d_hat = gradient_detect(y, h, eff, d_hat);
        }
        auto info = demodulate_info(d_hat, pilot, modem.config().modulation_order);
        if (true_data) {
            result.detection.ber_per_iter.push_back(
                bit_error_rate(info, *true_data, modem.config().modulation_order));
        }
        result.detection.d_hat = d_hat;
        result.detection.info_grid = std::move(info);
        ++result.detection.iterations_used;

        // Re-estimate against the reconstructed frame.
        std::vector<cplx> d_ref = d_pilot;
        for (std::size_t i = 0; i < total; ++i)
            d_ref[i] += result.detection.info_grid[i];

        const auto refined = estimate_paths(y, d_ref, n_paths, grid, modem);
        const double res = reconstruction_residual(y, refined.paths, d_ref, modem);

        const bool converged = channel_converged(refined.paths, est.paths, eff);

        if (res < accepted_residual) {
            est = refined;
            accepted_residual = res;
        } else if (outer > 0) {
            break;  // refinement stopped improving; keep the accepted state
        }
        if (converged) {
            result.detection.converged = true;
            break;
        }
    }

    result.paths = est.paths;
    result.final_residual = accepted_residual;
    return result;
}

IsacResult isac_loop(const IsacSceneContext& ctx, const IsacConfig& cfg) {
    ctx.nodes.validate();
    ctx.frame.validate();
    const std::size_t n_nodes = ctx.nodes.z() + 1;
    if (ctx.y.size() != n_nodes)
        throw ConfigError("isac_loop: one received vector per node required");
    const Modem modem(ctx.frame);

    IsacResult result;

    // Anchor: active sensing with the full known frame.
    SearchGrid anchor_grid = ctx.grid;
    if (!ctx.notch.empty()) anchor_grid.excluded_delays = ctx.notch[0];
    const auto anchor_est = estimate_paths(ctx.y[0], ctx.anchor_reference,
                                           ctx.n_targets, anchor_grid, modem);
    result.anchor_paths = anchor_est.paths;

    // Bistatic receivers: passive refinement loops.
    for (std::size_t q = 1; q < n_nodes; ++q) {
        SearchGrid grid = ctx.grid;
        if (ctx.notch.size() > q) grid.excluded_delays = ctx.notch[q];
        result.receivers.push_back(isac_receiver_loop(
            ctx.y[q], ctx.pilot, ctx.n_targets, grid, modem, cfg, ctx.noise_var,
            ctx.true_data));
    }

    // Fuse the final channel estimates into target states.
    result.targets.assign(static_cast<std::size_t>(ctx.n_targets), {});
    const auto links_for = [&](std::size_t node,
                               const std::vector<PathEstimate>& paths) {
        return associate_estimates(paths, ctx.true_delay[node],
                                   ctx.true_doppler[node]);
    };
    if (ctx.true_delay.size() == n_nodes && ctx.true_doppler.size() == n_nodes) {
        std::vector<std::vector<int>> assoc(n_nodes);
        assoc[0] = links_for(0, result.anchor_paths);
        for (std::size_t q = 1; q < n_nodes; ++q)
            assoc[q] = links_for(q, result.receivers[q - 1].paths);

        for (int i = 0; i < ctx.n_targets; ++i) {
            std::vector<LinkEstimate> links(n_nodes);
            bool complete = true;
            for (std::size_t q = 0; q < n_nodes; ++q) {
                const int j = assoc[q][static_cast<std::size_t>(i)];
                if (j < 0) {
                    complete = false;
                    break;
                }
                const auto& p = q == 0 ? result.anchor_paths[static_cast<std::size_t>(j)]
                                       : result.receivers[q - 1].paths[static_cast<std::size_t>(j)];
                links[q].delay_s = static_cast<double>(p.delay_idx) /
                                   (ctx.frame.M * ctx.frame.delta_f);
                links[q].doppler_hz = p.doppler_idx * ctx.frame.delta_f / ctx.frame.N;
            }
            if (!complete) continue;
            const auto fused = fuse_links(ctx.nodes, links, ctx.frame, ctx.fusion,
                                          ctx.xi_pos, ctx.xi_vel, ctx.r_floor);
            if (!fused.valid) continue;
            result.targets[static_cast<std::size_t>(i)].valid = true;
            result.targets[static_cast<std::size_t>(i)].position = fused.z.head<2>();
            result.targets[static_cast<std::size_t>(i)].velocity = fused.z.tail<2>();
        }
    }
    return result;
}

}  // namespace isac
