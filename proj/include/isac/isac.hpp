#pragma once
// Passive ISAC: pilot-only coarse channel estimation, regularized data
// detection (closed-form MMSE or gradient descent), symbol demodulation, and
// the outer loop alternating detection with channel re-estimation using the
// reconstructed frame d_P + vec(D_I_hat) as the reference.

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <vector>

#include "isac/channel.hpp"
#include "isac/estimator.hpp"
#include "isac/fusion.hpp"
#include "isac/scene.hpp"

namespace isac {

struct IsacConfig {
    double mu = 0.0;         // regularization; <= 0 derives sigma^2 / E|d|^2
    double eta = 0.0;        // gradient step; <= 0 derives 0.9/(lambda_max + mu)
    double eps_inner = 1e-6; // gradient stop: ||d_{t+1} - d_t|| < eps_inner
    int max_inner = 500;
    double eps_outer_gain = 1e-3;     // relative gain change
    long eps_outer_delay = 0;         // delay bins (exact match by default)
    double eps_outer_doppler = 1e-2;  // Doppler bins
    int max_outer = 8;
    // Largest grid solved with the closed form; gradient descent above.
    std::size_t mmse_max_dim = 256;
};

// Pilot-reference path estimation; the data symbols act as interference.
EstimateResult coarse_channel_estimate(std::span<const cplx> y,
                                       const DDFrame& pilot, int n_paths,
                                       const SearchGrid& grid,
                                       const Modem& modem);

// d_hat = (H^H H + mu I)^{-1} H^H y
Eigen::VectorXcd mmse_detect(const Eigen::VectorXcd& y,
                             const Eigen::MatrixXcd& h, double mu);

// Power-iteration estimate of lambda_max(H^H H), with a small safety factor.
double op_norm_sq_estimate(const DDChannelOp& op, int iters = 50);
double op_norm_sq_estimate(const Eigen::MatrixXcd& h, int iters = 50);

struct GradientStats {
    int iterations = 0;
    bool converged = false;
};

// Iterates d <- d - eta * (2 H^H (H d - y) + 2 mu d) until the step shrinks
// below eps_inner. Throws NumericError when the objective keeps rising.
std::vector<cplx> gradient_detect(std::span<const cplx> y, const DDChannelOp& h,
                                  const IsacConfig& cfg,
                                  std::span<const cplx> d_init = {},
                                  GradientStats* stats = nullptr);
std::vector<cplx> gradient_detect(std::span<const cplx> y,
                                  const Eigen::MatrixXcd& h,
                                  const IsacConfig& cfg,
                                  std::span<const cplx> d_init = {},
                                  GradientStats* stats = nullptr);

// D_I_hat: subtract the pilot grid, project every entry onto the alphabet.
std::vector<cplx> demodulate_info(std::span<const cplx> d_hat,
                                  const DDFrame& pilot, int modulation_order);

// Fraction of differing bits between two symbol grids.
double bit_error_rate(std::span<const cplx> a, std::span<const cplx> b,
                      int modulation_order);

struct DetectionResult {
    std::vector<cplx> d_hat;           // last detected full vector
    std::vector<cplx> info_grid;       // last demodulated D_I_hat
    std::vector<double> ber_per_iter;  // filled when true data is supplied
    int iterations_used = 0;
    bool converged = false;
};

struct IsacReceiverResult {
    std::vector<PathEstimate> paths;  // final accepted channel estimate
    DetectionResult detection;
    double final_residual = 0.0;
};

// Outer refinement loop for one passive receiver. noise_var feeds the default
// mu; true_data (vec(D_I)) enables per-iteration BER logging.
IsacReceiverResult isac_receiver_loop(
    std::span<const cplx> y, const DDFrame& pilot, int n_paths,
    const SearchGrid& grid, const Modem& modem, const IsacConfig& cfg,
    double noise_var, const std::vector<cplx>* true_data = nullptr);

// ---------------------------------------------------------------------------
// Multistatic ISAC
// ---------------------------------------------------------------------------

struct IsacSceneContext {
    NodeSet nodes;
    FrameConfig frame;
    DDFrame pilot;                      // pilot-only reference
    std::vector<std::vector<cplx>> y;   // received DD vector per node, 0 = anchor
    std::vector<cplx> anchor_reference; // full frame known at the anchor
    int n_targets = 1;
    double noise_var = 0.0;
    SearchGrid grid;
    std::vector<std::vector<long>> notch;         // per node direct-path bins
    std::vector<std::vector<long>> true_delay;    // [node][target], association oracle
    std::vector<std::vector<double>> true_doppler;
    const std::vector<cplx>* true_data = nullptr;
    FusionConfig fusion;
    double xi_pos = 1.0, xi_vel = 1.0;
    Eigen::Vector4d r_floor{1.0, 1.0, 0.25, 0.25};
};

struct IsacTargetEstimate {
    bool valid = false;
    Eigen::Vector2d position{0.0, 0.0};
    Eigen::Vector2d velocity{0.0, 0.0};
};

struct IsacResult {
    std::vector<IsacReceiverResult> receivers;  // bistatic nodes 1..Z
    std::vector<PathEstimate> anchor_paths;     // active monostatic estimate
    std::vector<IsacTargetEstimate> targets;
};

// Anchor senses actively (it knows the transmitted frame); bistatic receivers
// run the passive refinement loop; final estimates fuse to target states.
IsacResult isac_loop(const IsacSceneContext& ctx, const IsacConfig& cfg);

}  // namespace isac
