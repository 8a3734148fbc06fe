#pragma once
// Triangulation of target position/velocity from per-node ranges and radial
// velocities, consistency selection over the C(Z,2) triangle estimates, and
// the geometry-driven placement score.

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <vector>

#include "isac/scene.hpp"

namespace isac {

struct FusionConfig {
    double xi = 0.0;             // neighbor threshold; <= 0 selects automatically
    double det_threshold = 1e-6; // |det| below this marks a triangle degenerate
};

struct TriangleEstimate {
    Eigen::Vector2d position{0.0, 0.0};
    Eigen::Vector2d velocity{0.0, 0.0};
    int node_j = 0, node_k = 0;       // 1-based receiver indices
    double condition_number = 0.0;    // of the position system
    bool velocity_valid = false;
};

// Squared-range differencing: two receivers plus the anchor give a 2x2 linear
// system; exact for noiseless ranges. Empty when the nodes are collinear.
std::optional<Eigen::Vector2d> triangulate_position(
    double rho0, double rhoj, double rhok, const Eigen::Vector2d& anchor,
    const Eigen::Vector2d& rj, const Eigen::Vector2d& rk,
    double det_threshold = 1e-6);

// Radial-projection system at the (estimated) target position.
std::optional<Eigen::Vector2d> triangulate_velocity(
    double vj, double vk, const Eigen::Vector2d& position,
    const Eigen::Vector2d& rj, const Eigen::Vector2d& rk,
    double det_threshold = 1e-6);

// All triangles for one target given per-node ranges/radial velocities
// (index 0 = anchor). Degenerate triangles are dropped.
std::vector<TriangleEstimate> triangulate_all(const NodeSet& nodes,
                                              std::span<const double> ranges,
                                              std::span<const double> radial_v,
                                              double det_threshold = 1e-6);

// Densest-neighborhood average: the estimate with the most xi-neighbors is
// averaged with its neighbor set; ties break toward the lowest index.
Eigen::Vector2d nn_select(std::span<const Eigen::Vector2d> estimates, double xi);

struct NnSelection {
    Eigen::Vector2d mean{0.0, 0.0};
    std::vector<std::size_t> members;  // winner first, then its neighbors
};

NnSelection nn_select_detail(std::span<const Eigen::Vector2d> estimates,
                             double xi);

struct PlacementScore {
    double trace_cov = 0.0;      // m^2
    double max_eigen_cov = 0.0;  // m^2
    double triangle_area = 0.0;  // m^2
};

// First-order covariance of the triangulated position given the variances of
// the squared-range estimates at anchor, R_j, R_k. The scene is translated so
// the anchor sits at the origin before evaluating the closed forms.
PlacementScore placement_score(const Eigen::Vector2d& anchor,
                               const Eigen::Vector2d& rj,
                               const Eigen::Vector2d& rk, double var0,
                               double varj, double vark);

// Full per-target fusion: invert the per-node (delay, Doppler) estimates to
// ranges/radial velocities, triangulate every receiver pair, select with the
// neighbor rule, and estimate a diagonal measurement covariance (empirical
// over the winning neighbor set, floored elementwise).
struct FusedMeasurement {
    bool valid = false;
    Eigen::Vector4d z = Eigen::Vector4d::Zero();  // [alpha, beta, v_x, v_y]
    Eigen::Matrix4d r = Eigen::Matrix4d::Zero();
    int clamped_ranges = 0;
};

FusedMeasurement fuse_links(const NodeSet& nodes,
                            std::span<const LinkEstimate> links,
                            const FrameConfig& cfg, const FusionConfig& fusion,
                            double xi_pos, double xi_vel,
                            const Eigen::Vector4d& r_floor);

enum class PlacementMode { kOrthogonal, kGridSearch };

// Receiver deployment for a bounded region. Orthogonal mode pushes receivers
// to the region boundary along perpendicular axes through the anchor;
// grid-search scores every receiver pair on an n x n lattice and returns the
// trace-minimizing one.
NodeSet optimize_placement(const Eigen::Vector2d& anchor, const Region& region,
                           double var0, double varj, double vark,
                           PlacementMode mode, int z = 2, int lattice_n = 5);

}  // namespace isac
