#include "isac/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <thread>
#include <tuple>

#include "isac/errors.hpp"
#include "isac/stats.hpp"

namespace isac {

namespace {

constexpr const char* kSchemes[] = {"Act_Sen_Rnd", "Act_Sen_Opt",
                                    "KF_Act_Sen_Opt", "ISAC_Rnd", "ISAC_Opt"};

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

bool scheme_is_random_placement(const std::string& scheme) {
    return scheme == "Act_Sen_Rnd" || scheme == "ISAC_Rnd";
}

std::string fmt9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

}  // namespace

bool scheme_is_isac(const std::string& scheme) {
    return scheme == "ISAC_Rnd" || scheme == "ISAC_Opt";
}

bool scheme_is_known(const std::string& scheme) {
    for (const char* s : kSchemes)
        if (scheme == s) return true;
    return false;
}

void SimConfig::validate() const {
    frame.validate();
    scene.validate();
    motion.validate();
    if (sweep.trials < 1) throw ConfigError("sweep needs trials >= 1");
    if (sweep.steps < 1) throw ConfigError("sweep needs steps >= 1");
    if (sweep.snr_db.empty() || sweep.target_counts.empty() ||
        sweep.schemes.empty())
        throw ConfigError("sweep axes must be non-empty");
    for (const auto& s : sweep.schemes)
        if (!scheme_is_known(s)) throw ConfigError("unknown scheme id: " + s);
    for (int nt : sweep.target_counts)
        if (nt < 1) throw ConfigError("target counts must be >= 1");
    if (pilot_power < 0.0) throw ConfigError("pilot power must be >= 0");
    if (!randomize_targets && targets.empty())
        throw ConfigError("explicit targets required when randomize_targets=false");
}

double TrialRecord::pos_rmse_raw() const {
    return n_raw > 0 ? std::sqrt(pos_sse_raw / static_cast<double>(n_raw))
                     : std::numeric_limits<double>::quiet_NaN();
}
double TrialRecord::vel_rmse_raw() const {
    return n_raw > 0 ? std::sqrt(vel_sse_raw / static_cast<double>(n_raw))
                     : std::numeric_limits<double>::quiet_NaN();
}
double TrialRecord::pos_rmse_kf() const {
    return n_kf > 0 ? std::sqrt(pos_sse_kf / static_cast<double>(n_kf))
                    : std::numeric_limits<double>::quiet_NaN();
}
double TrialRecord::vel_rmse_kf() const {
    return n_kf > 0 ? std::sqrt(vel_sse_kf / static_cast<double>(n_kf))
                    : std::numeric_limits<double>::quiet_NaN();
}

std::uint64_t trial_seed(std::uint64_t master, const std::string& scheme,
                         double snr_db, int n_targets, int trial) {
    std::uint64_t snr_bits;
    static_assert(sizeof(snr_bits) == sizeof(snr_db));
    std::memcpy(&snr_bits, &snr_db, sizeof(snr_bits));
    return derive_seed(master, fnv1a(scheme), snr_bits,
                       static_cast<std::uint64_t>(n_targets),
                       static_cast<std::uint64_t>(trial));
}

SensingOptions make_sensing_options(const SimConfig& cfg,
                                    const std::string& scheme, double snr_db,
                                    Rng& rng) {
    SensingOptions opt;
    opt.frame = cfg.frame;
    opt.motion = cfg.motion;
    opt.fusion = cfg.fusion;
    opt.snr_db = snr_db;
    opt.pilot_power = cfg.pilot_power;
    opt.doppler_span = cfg.doppler_span;
    opt.doppler_step = cfg.doppler_step;
    opt.refine_doppler = cfg.refine_doppler;
    opt.refine_gains = cfg.refine_gains;
    opt.include_direct_path = cfg.include_direct_path;
    opt.r_floor = cfg.r_floor;

    opt.nodes = cfg.scene;
    if (scheme_is_random_placement(scheme)) {
        const Region& reg = cfg.scene.region;
        for (auto& rx : opt.nodes.receivers) {
            do {
                rx = {rng.uniform(reg.xmin, reg.xmax),
                      rng.uniform(reg.ymin, reg.ymax)};
            } while ((rx - opt.nodes.anchor).norm() < 1.0);
        }
    } else {
        const auto placed =
            optimize_placement(cfg.scene.anchor, cfg.scene.region, 1.0, 1.0, 1.0,
                               PlacementMode::kOrthogonal,
                               static_cast<int>(cfg.scene.z()));
        opt.nodes.receivers = placed.receivers;
    }
    return opt;
}

namespace {

std::vector<TargetTruth> draw_targets(const SimConfig& cfg, int n_targets,
                                      Rng& rng) {
    std::vector<TargetTruth> out;
    if (!cfg.randomize_targets &&
        cfg.targets.size() >= static_cast<std::size_t>(n_targets)) {
        out.assign(cfg.targets.begin(), cfg.targets.begin() + n_targets);
        return out;
    }
    const Region& reg = cfg.scene.region;
    const double mx = 0.1 * reg.width(), my = 0.1 * reg.height();
    for (int i = 0; i < n_targets; ++i) {
        TargetTruth t;
        do {
            t.position = {rng.uniform(reg.xmin + mx, reg.xmax - mx),
                          rng.uniform(reg.ymin + my, reg.ymax - my)};
        } while ((t.position - cfg.scene.anchor).norm() < 1.0);
        t.velocity = {rng.uniform(-cfg.initial_speed, cfg.initial_speed),
                      rng.uniform(-cfg.initial_speed, cfg.initial_speed)};
        out.push_back(t);
    }
    return out;
}

void accumulate_tracking(const TrackingResult& run, TrialRecord& rec) {
    for (const auto& step : run.steps) {
        if (step.has_measurement) {
            rec.pos_sse_raw += (step.z.head<2>() - step.truth.head<2>()).squaredNorm();
            rec.vel_sse_raw += (step.z.tail<2>() - step.truth.tail<2>()).squaredNorm();
            ++rec.n_raw;
        }
        if (step.posterior_valid) {
            rec.pos_sse_kf +=
                (step.posterior.head<2>() - step.truth.head<2>()).squaredNorm();
            rec.vel_sse_kf +=
                (step.posterior.tail<2>() - step.truth.tail<2>()).squaredNorm();
            ++rec.n_kf;
        }
    }
    rec.dropouts = run.dropouts;
}

void run_isac_trial(const SimConfig& cfg, const SensingOptions& opt,
                    const std::vector<TargetTruth>& targets, Rng& rng,
                    TrialRecord& rec) {
    const FrameConfig& frame_cfg = cfg.frame;
    const Modem modem(frame_cfg);
    const std::size_t n_nodes = opt.nodes.z() + 1;
    const std::size_t n_t = targets.size();

    const DDFrame frame = make_random_frame(frame_cfg, cfg.pilot_power, rng);
    const auto d = frame.combined();
    const auto s = modem.modulate(d);
    const double sig_pow =
        kern::active().norm_sq(s.data(), s.size()) / static_cast<double>(s.size());
    const double sigma2 = snr_to_noise_var(opt.snr_db, sig_pow);

    std::vector<std::vector<cplx>> gains(n_nodes, std::vector<cplx>(n_t));
    for (auto& per_node : gains)
        for (auto& g : per_node) g = rng.unit_phase();

    IsacSceneContext ctx;
    ctx.nodes = opt.nodes;
    ctx.frame = frame_cfg;
    ctx.pilot = frame;
    ctx.pilot.data.assign(frame_cfg.grid_size(), cplx{0.0, 0.0});
    ctx.anchor_reference = d;
    ctx.n_targets = static_cast<int>(n_t);
    ctx.noise_var = sigma2;
    ctx.fusion = cfg.fusion;
    ctx.r_floor = cfg.r_floor;
    ctx.true_data = &frame.data;

    const double diag = std::hypot(opt.nodes.region.width(),
                                   opt.nodes.region.height());
    const long l_max = std::min<long>(
        static_cast<long>(std::ceil(2.0 * diag / kSpeedOfLight * frame_cfg.M *
                                    frame_cfg.delta_f)) + 1,
        static_cast<long>(frame_cfg.grid_size()) - 1);
    ctx.grid = make_search_grid(l_max, cfg.doppler_span, cfg.doppler_step,
                                cfg.refine_doppler);

    // Per-triangle spread thresholds reused from the tracking chain defaults.
    const double range_step =
        kSpeedOfLight / (2.0 * frame_cfg.M * frame_cfg.delta_f);
    ctx.xi_pos = std::max(1.0, 30.0 * range_step);
    ctx.xi_vel = std::max(1.0, 3.0 * kSpeedOfLight * frame_cfg.delta_f /
                                   (2.0 * frame_cfg.N * frame_cfg.f_c) *
                                   cfg.doppler_step);
    if (cfg.fusion.xi > 0.0) ctx.xi_pos = ctx.xi_vel = cfg.fusion.xi;

    ctx.true_delay.resize(n_nodes);
    ctx.true_doppler.resize(n_nodes);
    ctx.notch.resize(n_nodes);
    ctx.y.resize(n_nodes);
    for (std::size_t qn = 0; qn < n_nodes; ++qn) {
        const auto spec =
            make_node_channel(frame_cfg, opt.nodes, targets, qn, gains[qn],
                              sigma2, cfg.include_direct_path);
        ctx.true_delay[qn] = spec.true_delay;
        ctx.true_doppler[qn] = spec.true_doppler;
        ctx.notch[qn] = spec.notch;
        const auto r = apply_channel(s, spec.channel, frame_cfg, rng.next_u64());
        ctx.y[qn] = modem.demodulate(r);
    }

    const auto result = isac_loop(ctx, cfg.isac);

    for (std::size_t i = 0; i < n_t; ++i) {
        if (!result.targets[i].valid) {
            ++rec.dropouts;
            continue;
        }
        rec.pos_sse_raw +=
            (result.targets[i].position - targets[i].position).squaredNorm();
        rec.vel_sse_raw +=
            (result.targets[i].velocity - targets[i].velocity).squaredNorm();
        ++rec.n_raw;
    }

    double first = 0.0, final = 0.0;
    int iters = 0;
    int counted = 0;
    for (const auto& rx : result.receivers) {
        if (rx.detection.ber_per_iter.empty()) continue;
        first += rx.detection.ber_per_iter.front();
        final += rx.detection.ber_per_iter.back();
        iters = std::max(iters, rx.detection.iterations_used);
        ++counted;
    }
    if (counted > 0) {
        rec.ber_first = first / counted;
        rec.ber_final = final / counted;
        rec.isac_iters = iters;
    }
}

}  // namespace

TrialRecord run_trial(const SimConfig& cfg, const std::string& scheme,
                      double snr_db, int n_targets, int trial) {
    if (!scheme_is_known(scheme)) throw ConfigError("unknown scheme id: " + scheme);

    TrialRecord rec;
    rec.scheme = scheme;
    rec.snr_db = snr_db;
    rec.n_targets = n_targets;
    rec.trial = trial;
    rec.seed = trial_seed(cfg.sweep.master_seed, scheme, snr_db, n_targets, trial);

    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(rec.seed);
    const SensingOptions opt = make_sensing_options(cfg, scheme, snr_db, rng);
    const auto targets = draw_targets(cfg, n_targets, rng);

    if (scheme_is_isac(scheme)) {
        run_isac_trial(cfg, opt, targets, rng, rec);
    } else {
        const auto run =
            run_tracking_loop(opt, targets, cfg.sweep.steps, rng.next_u64());
        accumulate_tracking(run, rec);
    }

    rec.runtime_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
    return rec;
}

std::vector<TrialRecord> run_sweep(const SimConfig& cfg) {
    cfg.validate();

    struct Task {
        std::string scheme;
        double snr;
        int nt;
        int trial;
    };
    std::vector<Task> tasks;
    for (const auto& scheme : cfg.sweep.schemes)
        for (double snr : cfg.sweep.snr_db)
            for (int nt : cfg.sweep.target_counts)
                for (int trial = 0; trial < cfg.sweep.trials; ++trial)
                    tasks.push_back({scheme, snr, nt, trial});

    std::vector<TrialRecord> records(tasks.size());
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const unsigned n_threads =
        cfg.sweep.threads > 0 ? static_cast<unsigned>(cfg.sweep.threads) : hw;

    if (n_threads <= 1 || tasks.size() <= 1) {
        for (std::size_t i = 0; i < tasks.size(); ++i) {
            const auto& t = tasks[i];
            records[i] = run_trial(cfg, t.scheme, t.snr, t.nt, t.trial);
        }
        return records;
    }

    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < n_threads; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= tasks.size()) return;
                const auto& t = tasks[i];
                records[i] = run_trial(cfg, t.scheme, t.snr, t.nt, t.trial);
            }
        });
    }
    for (auto& th : pool) th.join();
    return records;
}

std::vector<SummaryRow> aggregate(const std::vector<TrialRecord>& records) {
    if (records.empty()) throw InputError("aggregate: no records");

    std::map<std::tuple<std::string, double, int>, std::vector<const TrialRecord*>>
        groups;
    for (const auto& r : records)
        groups[{r.scheme, r.snr_db, r.n_targets}].push_back(&r);

    std::vector<SummaryRow> out;
    for (const auto& [key, rs] : groups) {
        SummaryRow row;
        row.scheme = std::get<0>(key);
        row.snr_db = std::get<1>(key);
        row.n_targets = std::get<2>(key);
        row.trials = static_cast<int>(rs.size());

        const auto pooled = [&](auto sse_of, auto n_of) {
            double sse = 0.0;
            long n = 0;
            for (const auto* r : rs) {
                sse += sse_of(*r);
                n += n_of(*r);
            }
            return n > 0 ? std::sqrt(sse / static_cast<double>(n))
                         : std::numeric_limits<double>::quiet_NaN();
        };
        const auto ci_of = [&](auto rmse_of, std::uint64_t salt) {
            std::vector<double> xs;
            for (const auto* r : rs) {
                const double v = rmse_of(*r);
                if (std::isfinite(v)) xs.push_back(v);
            }
            if (xs.empty()) return stats::Ci{};
            return stats::bootstrap_ci_mean(
                xs, 0.95, 500, derive_seed(0xB00757, fnv1a(row.scheme), salt));
        };

        row.rmse_pos_raw = pooled([](const auto& r) { return r.pos_sse_raw; },
                                  [](const auto& r) { return r.n_raw; });
        row.rmse_vel_raw = pooled([](const auto& r) { return r.vel_sse_raw; },
                                  [](const auto& r) { return r.n_raw; });
        row.rmse_pos_kf = pooled([](const auto& r) { return r.pos_sse_kf; },
                                 [](const auto& r) { return r.n_kf; });
        row.rmse_vel_kf = pooled([](const auto& r) { return r.vel_sse_kf; },
                                 [](const auto& r) { return r.n_kf; });

        const auto c1 = ci_of([](const auto& r) { return r.pos_rmse_raw(); }, 1);
        row.rmse_pos_raw_lo = c1.lo;
        row.rmse_pos_raw_hi = c1.hi;
        const auto c2 = ci_of([](const auto& r) { return r.vel_rmse_raw(); }, 2);
        row.rmse_vel_raw_lo = c2.lo;
        row.rmse_vel_raw_hi = c2.hi;
        const auto c3 = ci_of([](const auto& r) { return r.pos_rmse_kf(); }, 3);
        row.rmse_pos_kf_lo = c3.lo;
        row.rmse_pos_kf_hi = c3.hi;
        const auto c4 = ci_of([](const auto& r) { return r.vel_rmse_kf(); }, 4);
        row.rmse_vel_kf_lo = c4.lo;
        row.rmse_vel_kf_hi = c4.hi;

        double bf = 0.0, bl = 0.0;
        int nb = 0;
        for (const auto* r : rs) {
            if (std::isfinite(r->ber_first)) {
                bf += r->ber_first;
                bl += r->ber_final;
                ++nb;
            }
        }
        row.ber_first = nb > 0 ? bf / nb : std::numeric_limits<double>::quiet_NaN();
        row.ber_final = nb > 0 ? bl / nb : std::numeric_limits<double>::quiet_NaN();
        out.push_back(row);
    }
    return out;
}

void write_records_csv(const std::vector<TrialRecord>& records,
                       std::ostream& os) {
    os << "scheme,snr_db,n_targets,trial,seed,pos_rmse_raw,vel_rmse_raw,"
          "pos_rmse_kf,vel_rmse_kf,n_raw,n_kf,ber_first,ber_final,isac_iters,"
          "dropouts\n";
    for (const auto& r : records) {
        os << r.scheme << ',' << fmt9(r.snr_db) << ',' << r.n_targets << ','
           << r.trial << ',' << r.seed << ',' << fmt9(r.pos_rmse_raw()) << ','
           << fmt9(r.vel_rmse_raw()) << ',' << fmt9(r.pos_rmse_kf()) << ','
           << fmt9(r.vel_rmse_kf()) << ',' << r.n_raw << ',' << r.n_kf << ','
           << fmt9(r.ber_first) << ',' << fmt9(r.ber_final) << ','
           << r.isac_iters << ',' << r.dropouts << '\n';
    }
}

void write_timings_csv(const std::vector<TrialRecord>& records,
                       std::ostream& os) {
    os << "scheme,snr_db,n_targets,trial,runtime_ms\n";
    for (const auto& r : records) {
        os << r.scheme << ',' << fmt9(r.snr_db) << ',' << r.n_targets << ','
           << r.trial << ',' << fmt9(r.runtime_ms) << '\n';
    }
}

void write_summary_csv(const std::vector<SummaryRow>& summary,
                       std::ostream& os) {
    os << "scheme,snr_db,n_targets,trials,"
          "rmse_pos_raw,rmse_pos_raw_lo,rmse_pos_raw_hi,"
          "rmse_vel_raw,rmse_vel_raw_lo,rmse_vel_raw_hi,"
          "rmse_pos_kf,rmse_pos_kf_lo,rmse_pos_kf_hi,"
          "rmse_vel_kf,rmse_vel_kf_lo,rmse_vel_kf_hi,"
          "ber_first,ber_final\n";
    for (const auto& s : summary) {
        os << s.scheme << ',' << fmt9(s.snr_db) << ',' << s.n_targets << ','
           << s.trials << ',' << fmt9(s.rmse_pos_raw) << ','
           << fmt9(s.rmse_pos_raw_lo) << ',' << fmt9(s.rmse_pos_raw_hi) << ','
           << fmt9(s.rmse_vel_raw) << ',' << fmt9(s.rmse_vel_raw_lo) << ','
           << fmt9(s.rmse_vel_raw_hi) << ',' << fmt9(s.rmse_pos_kf) << ','
           << fmt9(s.rmse_pos_kf_lo) << ',' << fmt9(s.rmse_pos_kf_hi) << ','
           << fmt9(s.rmse_vel_kf) << ',' << fmt9(s.rmse_vel_kf_lo) << ','
           << fmt9(s.rmse_vel_kf_hi) << ',' << fmt9(s.ber_first) << ','
           << fmt9(s.ber_final) << '\n';
    }
}

void emit_plots(const std::vector<SummaryRow>& summary,
                const std::string& outdir) {
    if (summary.empty()) throw InputError("emit_plots: empty summary");
    namespace fs = std::filesystem;
    fs::create_directories(outdir);

    {
        std::ofstream os(fs::path(outdir) / "summary.csv", std::ios::binary);
        if (!os) throw NumericError("cannot write summary.csv");
        write_summary_csv(summary, os);
    }

    std::vector<std::string> schemes;
    std::vector<int> counts;
    for (const auto& s : summary) {
        if (std::find(schemes.begin(), schemes.end(), s.scheme) == schemes.end())
            schemes.push_back(s.scheme);
        if (std::find(counts.begin(), counts.end(), s.n_targets) == counts.end())
            counts.push_back(s.n_targets);
    }
    std::sort(schemes.begin(), schemes.end());
    std::sort(counts.begin(), counts.end());

    std::ofstream gp(fs::path(outdir) / "rmse_vs_snr.gp", std::ios::binary);
    if (!gp) throw NumericError("cannot write plot script");
    gp << "# gnuplot script; run from this directory\n"
          "set datafile separator ','\n"
          "set key outside\n"
          "set xlabel 'SNR (dB)'\n"
          "set ylabel 'position RMSE (m)'\n"
          "set logscale y\n"
          "plot \\\n";
    bool first_line = true;
    for (const auto& scheme : schemes) {
        for (int nt : counts) {
            if (!first_line) gp << ", \\\n";
            first_line = false;
            gp << "  'summary.csv' using 2:($1 eq '" << scheme << "' && $3 == "
               << nt << " ? $5 : 1/0) with linespoints title '" << scheme
               << " N_T=" << nt << "'";
        }
    }
    gp << "\n";

    std::ofstream bp(fs::path(outdir) / "ber_vs_snr.gp", std::ios::binary);
    bp << "# gnuplot script; run from this directory\n"
          "set datafile separator ','\n"
          "set key outside\n"
          "set xlabel 'SNR (dB)'\n"
          "set ylabel 'BER'\n"
          "set logscale y\n"
          "plot \\\n";
    first_line = true;
    for (const auto& scheme : schemes) {
        if (!first_line) bp << ", \\\n";
        first_line = false;
        bp << "  'summary.csv' using 2:($1 eq '" << scheme
           << "' ? $18 : 1/0) with linespoints title '" << scheme << "'";
    }
    bp << "\n";
}

}  // namespace isac
