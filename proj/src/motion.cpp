#include "isac/motion.hpp"

#include <cmath>

#include "isac/errors.hpp"

namespace isac {

void MotionParams::validate() const {
    if (delta <= 0.0) throw ConfigError("motion delta must be positive");
    if (psi < 0.0) throw ConfigError("motion psi must be non-negative");
    if (dt <= 0.0) throw ConfigError("motion dt must be positive");
}

Eigen::Matrix4d transition_matrix(const MotionParams& p) {
    p.validate();
    const double a = std::exp(-p.delta * p.dt);
    const double phi = (1.0 - a) / p.delta;
    Eigen::Matrix4d t = Eigen::Matrix4d::Identity();
    t(0, 2) = phi;
    t(1, 3) = phi;
    t(2, 2) = a;
    t(3, 3) = a;
    return t;
}

namespace {

struct NoiseBlock {
    double var_pos, var_vel, cov;
};

NoiseBlock ou_noise_block(const MotionParams& p) {
    const double a = std::exp(-p.delta * p.dt);
    const double psi2 = p.psi * p.psi;
    const double d = p.delta;
    NoiseBlock b;
    b.var_vel = psi2 * (1.0 - a * a) / (2.0 * d);
    b.var_pos = psi2 / (d * d) *
                (p.dt - 2.0 * (1.0 - a) / d + (1.0 - a * a) / (2.0 * d));
    b.cov = psi2 / (2.0 * d * d) * (1.0 - a) * (1.0 - a);
    return b;
}

}  // namespace

Eigen::Matrix4d process_noise_cov(const MotionParams& p) {
    p.validate();
    const NoiseBlock b = ou_noise_block(p);
    Eigen::Matrix4d q = Eigen::Matrix4d::Zero();
    q(0, 0) = q(1, 1) = b.var_pos;
    q(2, 2) = q(3, 3) = b.var_vel;
    q(0, 2) = q(2, 0) = b.cov;
    q(1, 3) = q(3, 1) = b.cov;
    return q;
}

Eigen::Vector4d motion_step(const Eigen::Vector4d& state, const MotionParams& p,
                            Rng& rng) {
    p.validate();
    const double a = std::exp(-p.delta * p.dt);
    const double phi = (1.0 - a) / p.delta;

    Eigen::Vector4d next;
    next(0) = state(0) + phi * state(2);
    next(1) = state(1) + phi * state(3);
    next(2) = p.omega.x() + a * (state(2) - p.omega.x());
    next(3) = p.omega.y() + a * (state(3) - p.omega.y());

    if (p.psi > 0.0) {
        const NoiseBlock b = ou_noise_block(p);
        // Cholesky of [[var_pos, cov], [cov, var_vel]] per axis.
        const double l11 = std::sqrt(b.var_pos);
        const double l21 = (l11 > 0.0) ? b.cov / l11 : 0.0;
        const double l22 = std::sqrt(std::max(0.0, b.var_vel - l21 * l21));
        for (int axis = 0; axis < 2; ++axis) {
            const double z1 = rng.normal();
            const double z2 = rng.normal();
            next(axis) += l11 * z1;
            next(axis + 2) += l21 * z1 + l22 * z2;
        }
    }
    return next;
}

Eigen::Vector4d reflect_into(const Eigen::Vector4d& state, const Region& region) {
    Eigen::Vector4d s = state;
    const auto fold = [](double x, double lo, double hi, double& v) {
        // A single fold handles the step sizes that occur here; iterate in
        // case a huge velocity overshoots both walls.
        for (int guard = 0; guard < 64 && (x < lo || x > hi); ++guard) {
            if (x < lo) {
                x = 2.0 * lo - x;
                v = -v;
            } else if (x > hi) {
                x = 2.0 * hi - x;
                v = -v;
            }
        }
        return x;
    };
    s(0) = fold(s(0), region.xmin, region.xmax, s(2));
    s(1) = fold(s(1), region.ymin, region.ymax, s(3));
    return s;
}

}  // namespace isac
