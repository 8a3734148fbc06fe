#include "isac/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "isac/errors.hpp"

namespace isac {

// ---------------------------------------------------------------------------
// Kalman core
// ---------------------------------------------------------------------------

void kalman_update(const Eigen::MatrixXd& t, const Eigen::MatrixXd& q,
                   const Eigen::MatrixXd& v, const Eigen::MatrixXd& r,
                   Eigen::VectorXd& s, Eigen::MatrixXd& p,
                   const Eigen::VectorXd& z, KfOps* ops) {
    const auto n = static_cast<unsigned long long>(s.size());
    const auto m = static_cast<unsigned long long>(z.size());
    const auto count = [&](unsigned long long c) {
        if (ops) ops->mults += c;
    };

    // Forecast
    const Eigen::VectorXd s_f = t * s;
    count(n * n);
    const Eigen::MatrixXd p_f = t * p * t.transpose() + q;
    count(2 * n * n * n);

    // Gain
    const Eigen::MatrixXd vp = v * p_f;  // m x n
    count(m * n * n);
    const Eigen::MatrixXd innov_cov = vp * v.transpose() + r;  // m x m
    count(m * n * m);
    const Eigen::LLT<Eigen::MatrixXd> llt(innov_cov);
    if (llt.info() != Eigen::Success)
        throw NumericError("singular innovation covariance V*P_f*V^T + R");
    // K = P_f V^T S^{-1}  via  K^T = S^{-1} (V P_f)
    const Eigen::MatrixXd k_gain = llt.solve(vp).transpose();  // n x m
    count(m * m * m / 3 + m * m * n);

    // Correct
    s = s_f + k_gain * (z - v * s_f);
    count(m * n + n * m);

    // Joseph form
    const Eigen::MatrixXd a =
        Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n),
                                  static_cast<Eigen::Index>(n)) -
        k_gain * v;
    count(n * m * n);
    p = a * p_f * a.transpose() + k_gain * r * k_gain.transpose();
    count(2 * n * n * n + n * m * m + n * m * n);
    p = 0.5 * (p + p.transpose()).eval();
}

FilterState kf_update(const FilterState& prev, const KalmanModel& model,
                      const Eigen::Vector4d& z, const Eigen::Matrix4d& r) {
    Eigen::VectorXd s = prev.s;
    Eigen::MatrixXd p = prev.p;
    kalman_update(model.t, model.q, model.v, r, s, p, z);
    FilterState next;
    next.s = s;
    next.p = p;
    return next;
}

FilterState kf_predict(const FilterState& prev, const KalmanModel& model) {
    FilterState next;
    next.s = model.t * prev.s;
    next.p = model.t * prev.p * model.t.transpose() + model.q;
    next.p = 0.5 * (next.p + next.p.transpose()).eval();
    return next;
}

// ---------------------------------------------------------------------------
// Sensing pipeline
// ---------------------------------------------------------------------------

NodeChannelSpec make_node_channel(const FrameConfig& cfg, const NodeSet& nodes,
                                  std::span<const TargetTruth> targets,
                                  std::size_t node_index,
                                  std::span<const cplx> gains, double noise_var,
                                  bool include_direct_path) {
    if (node_index > nodes.z())
        throw ConfigError("node index outside 0..Z");
    if (gains.size() != targets.size())
        throw ConfigError("one path gain per target required");

    NodeChannelSpec spec;
    spec.channel.noise_var = noise_var;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const auto links = ground_truth_links(nodes, targets[i], cfg);
        const LinkTruth& link = links[node_index];
        const ChannelPath p = make_path(gains[i], link.delay_s, link.doppler_hz, cfg);
        spec.channel.paths.push_back(p);
        spec.true_delay.push_back(p.delay_idx);
        spec.true_doppler.push_back(p.doppler_idx);
    }
    if (include_direct_path && node_index > 0) {
        const double dist =
            (nodes.receivers[node_index - 1] - nodes.anchor).norm();
        const ChannelPath p =
            make_path(cplx{1.0, 0.0}, dist / kSpeedOfLight, 0.0, cfg);
        spec.channel.paths.push_back(p);
        spec.notch.push_back(p.delay_idx);
    }
    return spec;
}

std::vector<int> associate_estimates(std::span<const PathEstimate> estimates,
                                     std::span<const long> true_delay,
                                     std::span<const double> true_doppler) {
    const std::size_t n_t = true_delay.size();
    std::vector<int> out(n_t, -1);
    std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
    pairs.reserve(n_t * estimates.size());
    for (std::size_t i = 0; i < n_t; ++i) {
        for (std::size_t j = 0; j < estimates.size(); ++j) {
            const double dl =
                static_cast<double>(true_delay[i] - estimates[j].delay_idx);
            const double dk = true_doppler[i] - estimates[j].doppler_idx;
            pairs.emplace_back(dl * dl + dk * dk, i, j);
        }
    }
    std::sort(pairs.begin(), pairs.end());
    std::vector<bool> used(estimates.size(), false);
    for (const auto& [d2, i, j] : pairs) {
        if (out[i] < 0 && !used[j]) {
            out[i] = static_cast<int>(j);
            used[j] = true;
        }
    }
    return out;
}

DDFrame make_random_frame(const FrameConfig& cfg, double pilot_power, Rng& rng) {
    const int bps = qam_bits_per_symbol(cfg.modulation_order);
    std::vector<std::uint8_t> bits(cfg.grid_size() * bps);
    for (auto& b : bits) b = static_cast<std::uint8_t>(rng.next_u64() & 1u);
    DDFrame frame;
    frame.M = cfg.M;
    frame.N = cfg.N;
    frame.data = qam_map(bits, cfg.modulation_order);
    frame.pilot_l = 0;
    frame.pilot_k = 0;
    frame.pilot_power = pilot_power;
    return frame;
}

namespace {

long max_grid_delay(const FrameConfig& cfg, const Region& region) {
    const double diag = std::hypot(region.width(), region.height());
    const double tau_max = 2.0 * diag / kSpeedOfLight;
    const long l = static_cast<long>(std::ceil(tau_max * cfg.M * cfg.delta_f)) + 1;
    return std::min<long>(l, static_cast<long>(cfg.grid_size()) - 1);
}

// Predicted per-triangle position sigma at the delay-quantization floor,
// used when no explicit neighbor threshold is configured.
double auto_xi_position(const SensingOptions& opt) {
    const double range_step = kSpeedOfLight / (2.0 * opt.frame.M * opt.frame.delta_f);
    const double sigma_rho = range_step / std::sqrt(12.0);
    const double rho_typ =
        0.25 * std::hypot(opt.nodes.region.width(), opt.nodes.region.height());
    const double var_sq_range = 4.0 * rho_typ * rho_typ * sigma_rho * sigma_rho;
    const auto score =
        placement_score(opt.nodes.anchor, opt.nodes.receivers[0],
                        opt.nodes.receivers[1], var_sq_range, var_sq_range,
                        var_sq_range);
    const double sigma = std::isfinite(score.trace_cov)
                             ? std::sqrt(score.trace_cov)
                             : 10.0 * range_step;
    return std::max(1.0, 3.0 * sigma);
}

double auto_xi_velocity(const SensingOptions& opt) {
    // Velocity per Doppler bin on the monostatic link, scaled to the search step.
    const double v_per_bin = kSpeedOfLight * opt.frame.delta_f /
                             (2.0 * opt.frame.N * opt.frame.f_c);
    return std::max(1.0, 3.0 * opt.doppler_step * v_per_bin / std::sqrt(12.0));
}

}  // namespace

SnapshotResult sense_snapshot(const SensingOptions& opt,
                              std::span<const TargetTruth> targets,
                              std::span<const std::vector<cplx>> gains_per_node,
                              Rng& rng) {
    const FrameConfig& cfg = opt.frame;
    const std::size_t n_t = targets.size();
    const std::size_t n_nodes = opt.nodes.z() + 1;
    if (gains_per_node.size() != n_nodes)
        throw ConfigError("one gain vector per node required");

    const Modem modem(cfg);
    const DDFrame frame = make_random_frame(cfg, opt.pilot_power, rng);
    const auto d = frame.combined();
    const auto s = modem.modulate(d);
    const double sig_pow =
        kern::active().norm_sq(s.data(), s.size()) / static_cast<double>(s.size());
    const double sigma2 =
        opt.noiseless ? 0.0 : snr_to_noise_var(opt.snr_db, sig_pow);

    SearchGrid base_grid =
        make_search_grid(max_grid_delay(cfg, opt.nodes.region), opt.doppler_span,
                         opt.doppler_step, opt.refine_doppler);
    const EstimateOptions est_opts{opt.refine_gains};

    // Per node, per target: averaged (tau, nu) over antenna repetitions.
    std::vector<std::vector<int>> hits(n_nodes, std::vector<int>(n_t, 0));
    std::vector<std::vector<LinkEstimate>> link(
        n_nodes, std::vector<LinkEstimate>(n_t, LinkEstimate{}));

    for (std::size_t qn = 0; qn < n_nodes; ++qn) {
        const auto spec = make_node_channel(cfg, opt.nodes, targets, qn,
                                            gains_per_node[qn], sigma2,
                                            opt.include_direct_path);
        SearchGrid grid = base_grid;
        grid.excluded_delays = spec.notch;
        for (int rep = 0; rep < opt.nodes.n_antennas; ++rep) {
            const auto r = apply_channel(s, spec.channel, cfg, rng.next_u64());
            const auto y = modem.demodulate(r);
            const auto est = estimate_paths(y, d, static_cast<int>(n_t), grid,
                                            modem, est_opts);
            const auto assoc = associate_estimates(est.paths, spec.true_delay,
                                                   spec.true_doppler);
            for (std::size_t i = 0; i < n_t; ++i) {
                if (assoc[i] < 0) continue;
                const auto& p = est.paths[static_cast<std::size_t>(assoc[i])];
                link[qn][i].delay_s +=
                    static_cast<double>(p.delay_idx) / (cfg.M * cfg.delta_f);
                link[qn][i].doppler_hz += p.doppler_idx * cfg.delta_f / cfg.N;
                ++hits[qn][i];
            }
        }
        for (std::size_t i = 0; i < n_t; ++i) {
            if (hits[qn][i] > 0) {
                link[qn][i].delay_s /= hits[qn][i];
                link[qn][i].doppler_hz /= hits[qn][i];
            }
        }
    }

    const double xi_pos = opt.fusion.xi > 0.0 ? opt.fusion.xi : auto_xi_position(opt);
    const double xi_vel = opt.fusion.xi > 0.0 ? opt.fusion.xi : auto_xi_velocity(opt);

    SnapshotResult out;
    out.valid.assign(n_t, false);
    out.z.assign(n_t, Eigen::Vector4d::Zero());
    out.r.assign(n_t, Eigen::Matrix4d::Zero());

    for (std::size_t i = 0; i < n_t; ++i) {
        bool complete = true;
        for (std::size_t qn = 0; qn < n_nodes; ++qn)
            if (hits[qn][i] == 0) complete = false;
        if (!complete) continue;

        std::vector<LinkEstimate> links(n_nodes);
        for (std::size_t qn = 0; qn < n_nodes; ++qn) links[qn] = link[qn][i];
        const auto fused = fuse_links(opt.nodes, links, cfg, opt.fusion, xi_pos,
                                      xi_vel, opt.r_floor);
        if (!fused.valid) continue;
        out.valid[i] = true;
        out.z[i] = fused.z;
        out.r[i] = fused.r;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Tracking loop
// ---------------------------------------------------------------------------

TrackingResult run_tracking_loop(const SensingOptions& opt,
                                 std::vector<TargetTruth> targets, int steps,
                                 std::uint64_t seed) {
    opt.frame.validate();
    opt.nodes.validate();
    opt.motion.validate();
    if (targets.empty()) throw ConfigError("tracking loop needs targets");
    if (steps < 1) throw ConfigError("tracking loop needs steps >= 1");

    const std::size_t n_t = targets.size();
    const std::size_t n_nodes = opt.nodes.z() + 1;
    Rng rng(seed);

    std::vector<std::vector<cplx>> gains(n_nodes, std::vector<cplx>(n_t));
    const auto draw_gains = [&] {
        for (auto& per_node : gains)
            for (auto& g : per_node) g = rng.unit_phase();
    };
    draw_gains();

    KalmanModel model;
    model.t = transition_matrix(opt.motion);
    model.q = process_noise_cov(opt.motion);

    std::vector<FilterState> filters(n_t);
    std::vector<bool> initialized(n_t, false);

    TrackingResult result;
    result.steps.reserve(static_cast<std::size_t>(steps) * n_t);

    for (int t = 1; t <= steps; ++t) {
        for (auto& tgt : targets) {
            Eigen::Vector4d s4;
            s4 << tgt.position(0), tgt.position(1), tgt.velocity(0),
                tgt.velocity(1);
            s4 = reflect_into(motion_step(s4, opt.motion, rng),
                              opt.nodes.region);
            tgt.position = s4.head<2>();
            tgt.velocity = s4.tail<2>();
        }
        if (opt.redraw_gain_phase) draw_gains();

        const auto snap = sense_snapshot(opt, targets, gains, rng);

        for (std::size_t i = 0; i < n_t; ++i) {
            StepRecord rec;
            rec.t = t;
            rec.target = static_cast<int>(i);
            rec.truth << targets[i].position(0), targets[i].position(1),
                targets[i].velocity(0), targets[i].velocity(1);

            if (snap.valid[i]) {
                rec.has_measurement = true;
                rec.z = snap.z[i];
                if (!initialized[i]) {
                    filters[i].s = snap.z[i];
                    filters[i].p = 4.0 * snap.r[i];
                    initialized[i] = true;
                } else {
                    filters[i] = kf_update(filters[i], model, snap.z[i], snap.r[i]);
                }
            } else {
                ++result.dropouts;
                if (initialized[i]) filters[i] = kf_predict(filters[i], model);
            }

            if (initialized[i]) {
                rec.posterior = filters[i].s;
                rec.posterior_valid = true;
                rec.trace_p = filters[i].p.trace();
            }
            result.steps.push_back(rec);
        }
    }
    return result;
}

}  // namespace isac
