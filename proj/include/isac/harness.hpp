#pragma once
// Experiment orchestration: Monte Carlo sweeps over SNR, target count and
// scheme, deterministic per-trial seeding, CSV output and plot-script
// emission.
//
// Schemes:
//   Act_Sen_Rnd     active sensing, receivers drawn uniformly per trial
//   Act_Sen_Opt     active sensing, orthogonal boundary placement
//   KF_Act_Sen_Opt  KF-assisted active sensing, orthogonal placement
//   ISAC_Rnd        passive ISAC, random placement (single snapshot per trial)
//   ISAC_Opt        passive ISAC, orthogonal placement
//
// Per-trial seeds derive from the master seed and the (scheme name hash,
// SNR bit pattern, target count, trial index) counters, so a record is
// reproducible in isolation and independent of list ordering.

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "isac/isac.hpp"
#include "isac/tracker.hpp"

namespace isac {

struct SweepConfig {
    std::vector<double> snr_db{0.0};
    std::vector<int> target_counts{1};
    std::vector<std::string> schemes{"Act_Sen_Opt"};
    int trials = 100;
    int steps = 60;          // tracking steps per active-sensing trial
    std::uint64_t master_seed = 1;
    int threads = 0;         // 0 = hardware concurrency
};

struct SimConfig {
    FrameConfig frame;
    NodeSet scene{{0.0, 0.0},
                  {Eigen::Vector2d{200.0, 0.0}, Eigen::Vector2d{0.0, 200.0}},
                  Region{},
                  1};
    std::vector<TargetTruth> targets;  // used when randomize_targets is false
    bool randomize_targets = true;
    double initial_speed = 2.0;        // |v| bound for randomized targets, m/s
    MotionParams motion;

    double doppler_span = 2.0;
    double doppler_step = 0.25;
    bool refine_doppler = true;
    bool refine_gains = true;

    FusionConfig fusion;
    IsacConfig isac;
    SweepConfig sweep;

    double pilot_power = 1.0;
    bool include_direct_path = false;
    Eigen::Vector4d r_floor{1.0, 1.0, 0.25, 0.25};

    void validate() const;
};

bool scheme_is_isac(const std::string& scheme);
bool scheme_is_known(const std::string& scheme);

struct TrialRecord {
    std::string scheme;
    double snr_db = 0.0;
    int n_targets = 1;
    int trial = 0;
    std::uint64_t seed = 0;

    // Sums of squared errors with sample counts, so RMSE pools exactly.
    double pos_sse_raw = 0.0, vel_sse_raw = 0.0;
    long n_raw = 0;
    double pos_sse_kf = 0.0, vel_sse_kf = 0.0;
    long n_kf = 0;

    double ber_first = std::numeric_limits<double>::quiet_NaN();
    double ber_final = std::numeric_limits<double>::quiet_NaN();
    int isac_iters = 0;
    int dropouts = 0;
    double runtime_ms = 0.0;  // reported separately; excluded from records.csv

    double pos_rmse_raw() const;
    double vel_rmse_raw() const;
    double pos_rmse_kf() const;
    double vel_rmse_kf() const;
};

// Derives the per-trial seed (documented counter scheme above).
std::uint64_t trial_seed(std::uint64_t master, const std::string& scheme,
                         double snr_db, int n_targets, int trial);

std::vector<TrialRecord> run_sweep(const SimConfig& cfg);

// One trial, reproducible in isolation.
TrialRecord run_trial(const SimConfig& cfg, const std::string& scheme,
                      double snr_db, int n_targets, int trial);

struct SummaryRow {
    std::string scheme;
    double snr_db = 0.0;
    int n_targets = 1;
    int trials = 0;
    double rmse_pos_raw = 0.0, rmse_pos_raw_lo = 0.0, rmse_pos_raw_hi = 0.0;
    double rmse_vel_raw = 0.0, rmse_vel_raw_lo = 0.0, rmse_vel_raw_hi = 0.0;
    double rmse_pos_kf = 0.0, rmse_pos_kf_lo = 0.0, rmse_pos_kf_hi = 0.0;
    double rmse_vel_kf = 0.0, rmse_vel_kf_lo = 0.0, rmse_vel_kf_hi = 0.0;
    double ber_first = 0.0, ber_final = 0.0;
};

std::vector<SummaryRow> aggregate(const std::vector<TrialRecord>& records);

void write_records_csv(const std::vector<TrialRecord>& records, std::ostream& os);
void write_timings_csv(const std::vector<TrialRecord>& records, std::ostream& os);
void write_summary_csv(const std::vector<SummaryRow>& summary, std::ostream& os);

// Writes summary.csv plus self-contained gnuplot scripts referencing it.
void emit_plots(const std::vector<SummaryRow>& summary, const std::string& outdir);

// Structured key-value (JSON) config mirroring the SimConfig fields.
SimConfig load_config(const std::string& path);
SimConfig default_config();

// Assembles the per-trial sensing options for a scheme (placement applied).
SensingOptions make_sensing_options(const SimConfig& cfg,
                                    const std::string& scheme, double snr_db,
                                    Rng& rng);

}  // namespace isac
