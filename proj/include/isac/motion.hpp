#pragma once
// Correlated-random-walk target dynamics: the velocity follows a discretized
// Ornstein-Uhlenbeck process with rate delta and diffusion psi, the position
// integrates it. State vector is [alpha, beta, v_x, v_y].

#include <Eigen/Dense>

#include "isac/rng.hpp"
#include "isac/scene.hpp"

namespace isac {

struct MotionParams {
    double delta = 1.5;               // velocity autocorrelation rate, 1/s
    double psi = 0.5;                 // diffusion coefficient
    Eigen::Vector2d omega{0.0, 0.0};  // mean velocity
    double dt = 0.5;                  // step, s

    void validate() const;
};

// T = [[1,0,phi,0],[0,1,0,phi],[0,0,a,0],[0,0,0,a]],
// a = exp(-delta*dt), phi = (1-a)/delta.
Eigen::Matrix4d transition_matrix(const MotionParams& p);

// Exact one-step covariance of the discretized OU state noise,
// block-correlated between position and velocity per axis.
Eigen::Matrix4d process_noise_cov(const MotionParams& p);

// One motion step; deterministic given the generator state. With a nonzero
// mean velocity the update reverts toward omega.
Eigen::Vector4d motion_step(const Eigen::Vector4d& state, const MotionParams& p,
                            Rng& rng);

// Reflecting boundary: positions folded back into the region, the offending
// velocity component sign-flipped.
Eigen::Vector4d reflect_into(const Eigen::Vector4d& state, const Region& region);

}  // namespace isac
