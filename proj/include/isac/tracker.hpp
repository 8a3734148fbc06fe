#pragma once
// Kalman filtering over the CRW motion model and the KF-assisted active
// sensing loop: per step, advance the targets, synthesize OTFS frames at
// every node, estimate per-path delay/Doppler/gain, invert to ranges and
// radial velocities, triangulate + select to build the measurement
// z = [alpha, beta, v_x, v_y], then filter.

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "isac/channel.hpp"
#include "isac/estimator.hpp"
#include "isac/fusion.hpp"
#include "isac/motion.hpp"
#include "isac/scene.hpp"

namespace isac {

// ---------------------------------------------------------------------------
// Kalman core
// ---------------------------------------------------------------------------

struct KfOps {
    unsigned long long mults = 0;
};

// One predict+correct cycle with the Joseph-form covariance update. Dynamic
// dimensions so the cost scaling stays observable through the multiply
// counter; the tracking loop runs it at n = m = 4.
void kalman_update(const Eigen::MatrixXd& t, const Eigen::MatrixXd& q,
                   const Eigen::MatrixXd& v, const Eigen::MatrixXd& r,
                   Eigen::VectorXd& s, Eigen::MatrixXd& p,
                   const Eigen::VectorXd& z, KfOps* ops = nullptr);

struct KalmanModel {
    Eigen::Matrix4d t = Eigen::Matrix4d::Identity();
    Eigen::Matrix4d v = Eigen::Matrix4d::Identity();
    Eigen::Matrix4d q = Eigen::Matrix4d::Zero();
};

struct FilterState {
    Eigen::Vector4d s = Eigen::Vector4d::Zero();
    Eigen::Matrix4d p = Eigen::Matrix4d::Zero();
};

FilterState kf_update(const FilterState& prev, const KalmanModel& model,
                      const Eigen::Vector4d& z, const Eigen::Matrix4d& r);

// Time update only (used when fusion produced no measurement).
FilterState kf_predict(const FilterState& prev, const KalmanModel& model);

// ---------------------------------------------------------------------------
// Sensing pipeline
// ---------------------------------------------------------------------------

struct SensingOptions {
    FrameConfig frame;
    NodeSet nodes;
    MotionParams motion;
    FusionConfig fusion;

    double snr_db = 0.0;
    bool noiseless = false;  // overrides snr_db with sigma^2 = 0
    double pilot_power = 1.0;

    double doppler_span = 2.0;   // search span, bins each side of zero
    double doppler_step = 0.25;  // candidate spacing, bins
    bool refine_doppler = true;
    bool refine_gains = true;

    bool include_direct_path = false;  // anchor->receiver LoS, notched in search
    bool redraw_gain_phase = false;    // fresh path phases every step

    // Floor for the diagonal measurement covariance fed to the filter.
    Eigen::Vector4d r_floor{1.0, 1.0, 0.25, 0.25};
};

// Per-node channel for the current target constellation, with the quantized
// ground-truth bins used for oracle association.
struct NodeChannelSpec {
    ChannelRealization channel;
    std::vector<long> true_delay;
    std::vector<double> true_doppler;
    std::vector<long> notch;  // direct-path delay bins (bistatic only)
};

NodeChannelSpec make_node_channel(const FrameConfig& cfg, const NodeSet& nodes,
                                  std::span<const TargetTruth> targets,
                                  std::size_t node_index,
                                  std::span<const cplx> gains, double noise_var,
                                  bool include_direct_path);

// Greedy one-to-one matching of estimates to targets by (delay, Doppler)
// grid distance; returns one estimate index per target, -1 when unmatched.
std::vector<int> associate_estimates(std::span<const PathEstimate> estimates,
                                     std::span<const long> true_delay,
                                     std::span<const double> true_doppler);

DDFrame make_random_frame(const FrameConfig& cfg, double pilot_power, Rng& rng);

// One multistatic snapshot across all nodes: per-target fused measurement and
// its (floored, diagonal) covariance estimate.
struct SnapshotResult {
    std::vector<bool> valid;
    std::vector<Eigen::Vector4d> z;
    std::vector<Eigen::Matrix4d> r;
};

SnapshotResult sense_snapshot(const SensingOptions& opt,
                              std::span<const TargetTruth> targets,
                              std::span<const std::vector<cplx>> gains_per_node,
                              Rng& rng);

// ---------------------------------------------------------------------------
// Tracking loop
// ---------------------------------------------------------------------------

struct StepRecord {
    int t = 0;
    int target = 0;
    Eigen::Vector4d truth = Eigen::Vector4d::Zero();
    bool has_measurement = false;
    Eigen::Vector4d z = Eigen::Vector4d::Zero();
    Eigen::Vector4d posterior = Eigen::Vector4d::Zero();
    bool posterior_valid = false;
    double trace_p = 0.0;
};

struct TrackingResult {
    std::vector<StepRecord> steps;  // steps * targets records, step-major
    int dropouts = 0;
};

TrackingResult run_tracking_loop(const SensingOptions& opt,
                                 std::vector<TargetTruth> targets, int steps,
                                 std::uint64_t seed);

}  // namespace isac
