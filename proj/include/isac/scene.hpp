#pragma once
// Multistatic geometry: one anchor (transmitter + monostatic receiver),
// Z bistatic receivers, targets moving in a bounded planar region.

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "isac/modem.hpp"

namespace isac {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

struct Region {
    double xmin = -200.0, xmax = 200.0;
    double ymin = -200.0, ymax = 200.0;

    bool contains(const Eigen::Vector2d& p) const {
        return p.x() >= xmin && p.x() <= xmax && p.y() >= ymin && p.y() <= ymax;
    }
    double width() const { return xmax - xmin; }
    double height() const { return ymax - ymin; }
};

struct NodeSet {
    Eigen::Vector2d anchor{0.0, 0.0};
    std::vector<Eigen::Vector2d> receivers;  // R_1 .. R_Z
    Region region;
    int n_antennas = 1;  // independent measurement repetitions per node

    std::size_t z() const { return receivers.size(); }
    void validate() const;
};

struct TargetTruth {
    Eigen::Vector2d position{0.0, 0.0};
    Eigen::Vector2d velocity{0.0, 0.0};
};

// One sensing link; index 0 is the monostatic anchor link, 1..Z bistatic.
struct LinkTruth {
    double range = 0.0;     // rho_{i,q}, target-to-node distance, m
    double radial_v = 0.0;  // v_{i,q}, m/s, positive toward the node
    double delay_s = 0.0;   // tau (round trip for q=0, anchor+receiver path else)
    double doppler_hz = 0.0;
};

std::vector<LinkTruth> ground_truth_links(const NodeSet& nodes,
                                          const TargetTruth& target,
                                          const FrameConfig& cfg);

struct LinkEstimate {
    double delay_s = 0.0;
    double doppler_hz = 0.0;
};

struct InvertedLinks {
    std::vector<double> range;     // rho_hat per node, index 0 = anchor
    std::vector<double> radial_v;  // v_hat per node
    int clamped_ranges = 0;        // non-positive bistatic inversions clamped to 0
};

// Exact algebraic inverse of ground_truth_links. Bistatic radial velocity is
// recovered as v_hat = nu_hat*c/f_c - v0_hat, the inverse of the stated
// forward model; paper_literal_doppler reproduces the paper's printed
// (nu_j - nu_0)*c/f_c instead.
InvertedLinks invert_links(std::span<const LinkEstimate> links,
                           const FrameConfig& cfg,
                           bool paper_literal_doppler = false);

}  // namespace isac
