#include "isac/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "isac/errors.hpp"

namespace isac {

std::optional<Eigen::Vector2d> triangulate_position(
    double rho0, double rhoj, double rhok, const Eigen::Vector2d& anchor,
    const Eigen::Vector2d& rj, const Eigen::Vector2d& rk,
    double det_threshold) {
    Eigen::Matrix2d a;
    a << rj.x() - anchor.x(), rj.y() - anchor.y(),
         rk.x() - anchor.x(), rk.y() - anchor.y();
    const double det = a.determinant();
    if (std::abs(det) < det_threshold) return std::nullopt;

    const double n0 = anchor.squaredNorm();
    Eigen::Vector2d b;
    b << 0.5 * (rho0 * rho0 - rhoj * rhoj - (n0 - rj.squaredNorm())),
         0.5 * (rho0 * rho0 - rhok * rhok - (n0 - rk.squaredNorm()));
    return Eigen::Vector2d(a.inverse() * b);
}

std::optional<Eigen::Vector2d> triangulate_velocity(
    double vj, double vk, const Eigen::Vector2d& position,
    const Eigen::Vector2d& rj, const Eigen::Vector2d& rk,
    double det_threshold) {
    const double rhoj = (rj - position).norm();
    const double rhok = (rk - position).norm();
    if (rhoj < 1e-9 || rhok < 1e-9) return std::nullopt;

    Eigen::Matrix2d c;
    c.row(0) = ((rj - position) / rhoj).transpose();
    c.row(1) = ((rk - position) / rhok).transpose();
    // Rows are unit vectors, so the determinant is already scale-free.
    if (std::abs(c.determinant()) < det_threshold) return std::nullopt;

    Eigen::Vector2d d;
    d << vj, vk;
    return Eigen::Vector2d(c.inverse() * d);
}

namespace {

double condition_2x2(const Eigen::Matrix2d& a) {
    const Eigen::JacobiSVD<Eigen::Matrix2d> svd(a);
    const double smin = svd.singularValues()(1);
    if (smin <= 0.0) return std::numeric_limits<double>::infinity();
    return svd.singularValues()(0) / smin;
}

}  // namespace

std::vector<TriangleEstimate> triangulate_all(const NodeSet& nodes,
                                              std::span<const double> ranges,
                                              std::span<const double> radial_v,
                                              double det_threshold) {
    const std::size_t z = nodes.z();
    if (ranges.size() != z + 1 || radial_v.size() != z + 1)
        throw InputError("triangulate_all: expected one range per node");

    std::vector<TriangleEstimate> out;
    for (std::size_t j = 0; j < z; ++j) {
        for (std::size_t k = j + 1; k < z; ++k) {
            const auto pos = triangulate_position(
                ranges[0], ranges[j + 1], ranges[k + 1], nodes.anchor,
                nodes.receivers[j], nodes.receivers[k], det_threshold);
            if (!pos) continue;

            TriangleEstimate est;
            est.position = *pos;
            est.node_j = static_cast<int>(j + 1);
            est.node_k = static_cast<int>(k + 1);

            Eigen::Matrix2d a;
            a.row(0) = (nodes.receivers[j] - nodes.anchor).transpose();
            a.row(1) = (nodes.receivers[k] - nodes.anchor).transpose();
            est.condition_number = condition_2x2(a);

            if (const auto vel = triangulate_velocity(
                    radial_v[j + 1], radial_v[k + 1], *pos, nodes.receivers[j],
                    nodes.receivers[k], det_threshold)) {
                est.velocity = *vel;
                est.velocity_valid = true;
            }
            out.push_back(est);
        }
    }
    return out;
}

NnSelection nn_select_detail(std::span<const Eigen::Vector2d> estimates,
                             double xi) {
    if (estimates.empty()) throw InputError("nn_select: empty estimate list");
    if (xi <= 0.0) throw InputError("nn_select: threshold must be positive");

    NnSelection sel;
    if (estimates.size() == 1) {
        sel.mean = estimates[0];
        sel.members = {0};
        return sel;
    }

    std::size_t best = 0;
    std::size_t best_count = 0;
    bool have_best = false;
    for (std::size_t n = 0; n < estimates.size(); ++n) {
        std::size_t count = 0;
        for (std::size_t m = 0; m < estimates.size(); ++m) {
            if (m != n && (estimates[n] - estimates[m]).norm() <= xi) ++count;
        }
        if (!have_best || count > best_count) {
            have_best = true;
            best = n;
            best_count = count;
        }
    }

    sel.members.push_back(best);
    Eigen::Vector2d sum = estimates[best];
    for (std::size_t m = 0; m < estimates.size(); ++m) {
        if (m != best && (estimates[best] - estimates[m]).norm() <= xi) {
            sum += estimates[m];
            sel.members.push_back(m);
        }
    }
    sel.mean = sum / static_cast<double>(sel.members.size());
    return sel;
}

Eigen::Vector2d nn_select(std::span<const Eigen::Vector2d> estimates, double xi) {
    return nn_select_detail(estimates, xi).mean;
}

namespace {

double sample_variance(const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double acc = 0.0;
    for (double x : xs) acc += (x - mean) * (x - mean);
    return acc / static_cast<double>(xs.size());
}

}  // namespace

FusedMeasurement fuse_links(const NodeSet& nodes,
                            std::span<const LinkEstimate> links,
                            const FrameConfig& cfg, const FusionConfig& fusion,
                            double xi_pos, double xi_vel,
                            const Eigen::Vector4d& r_floor) {
    FusedMeasurement out;
    const auto inv = invert_links(links, cfg);
    out.clamped_ranges = inv.clamped_ranges;

    const auto triangles =
        triangulate_all(nodes, inv.range, inv.radial_v, fusion.det_threshold);
    std::vector<Eigen::Vector2d> positions, velocities;
    for (const auto& t : triangles) {
        positions.push_back(t.position);
        if (t.velocity_valid) velocities.push_back(t.velocity);
    }
    if (positions.empty() || velocities.empty()) return out;

    const auto pos_sel = nn_select_detail(positions, xi_pos);
    const auto vel_sel = nn_select_detail(velocities, xi_vel);

    out.z << pos_sel.mean(0), pos_sel.mean(1), vel_sel.mean(0), vel_sel.mean(1);

    std::vector<double> px, py, vx, vy;
    for (std::size_t m : pos_sel.members) {
        px.push_back(positions[m](0));
        py.push_back(positions[m](1));
    }
    for (std::size_t m : vel_sel.members) {
        vx.push_back(velocities[m](0));
        vy.push_back(velocities[m](1));
    }
    out.r(0, 0) = std::max(sample_variance(px), r_floor(0));
    out.r(1, 1) = std::max(sample_variance(py), r_floor(1));
    out.r(2, 2) = std::max(sample_variance(vx), r_floor(2));
    out.r(3, 3) = std::max(sample_variance(vy), r_floor(3));
    out.valid = true;
    return out;
}

PlacementScore placement_score(const Eigen::Vector2d& anchor,
                               const Eigen::Vector2d& rj,
                               const Eigen::Vector2d& rk, double var0,
                               double varj, double vark) {
    const double xj = rj.x() - anchor.x(), yj = rj.y() - anchor.y();
    const double xk = rk.x() - anchor.x(), yk = rk.y() - anchor.y();
    const double det = xj * yk - xk * yj;

    PlacementScore score;
    score.triangle_area = 0.5 * std::abs(det);
    if (std::abs(det) < 1e-12) {
        score.trace_cov = std::numeric_limits<double>::infinity();
        score.max_eigen_cov = std::numeric_limits<double>::infinity();
        return score;
    }

    // Error propagation through [alpha; beta] = A^{-1} B with perturbed
    // squared ranges: delta_B = 0.5 * [d0 - dj; d0 - dk].
    const double d4 = 4.0 * det * det;
    const double var_alpha =
        (var0 * (yk - yj) * (yk - yj) + varj * yk * yk + vark * yj * yj) / d4;
    const double var_beta =
        (var0 * (xj - xk) * (xj - xk) + varj * xk * xk + vark * xj * xj) / d4;

    score.trace_cov = var_alpha + var_beta;
    score.max_eigen_cov = std::max(var_alpha, var_beta);
    return score;
}

NodeSet optimize_placement(const Eigen::Vector2d& anchor, const Region& region,
                           double var0, double varj, double vark,
                           PlacementMode mode, int z, int lattice_n) {
    if (!region.contains(anchor)) throw ConfigError("anchor outside region");
    if (z < 2) throw ConfigError("placement needs at least two receivers");
    if (region.width() < 1e-6 || region.height() < 1e-6)
        throw ConfigError("region too small for placement");

    NodeSet nodes;
    nodes.anchor = anchor;
    nodes.region = region;

    if (mode == PlacementMode::kOrthogonal) {
        // Push each receiver to the boundary along axes through the anchor,
        // picking the far side to maximize |x_j| and |y_k|.
        const double dx = (region.xmax - anchor.x() >= anchor.x() - region.xmin)
                              ? region.xmax : region.xmin;
        const double dy = (region.ymax - anchor.y() >= anchor.y() - region.ymin)
                              ? region.ymax : region.ymin;
        const double ox = (dx == region.xmax) ? region.xmin : region.xmax;
        const double oy = (dy == region.ymax) ? region.ymin : region.ymax;
        const Eigen::Vector2d spots[4] = {{dx, anchor.y()},
                                          {anchor.x(), dy},
                                          {ox, anchor.y()},
                                          {anchor.x(), oy}};
        for (int i = 0; i < z; ++i) nodes.receivers.push_back(spots[i % 4]);
        nodes.validate();
        return nodes;
    }

    if (lattice_n < 2) throw ConfigError("grid search needs a lattice of >= 2");
    if (z != 2)
        throw ConfigError("grid-search placement supports exactly two receivers");
    std::vector<Eigen::Vector2d> lattice;
    for (int ix = 0; ix < lattice_n; ++ix) {
        for (int iy = 0; iy < lattice_n; ++iy) {
            const Eigen::Vector2d p{
                region.xmin + region.width() * ix / (lattice_n - 1),
                region.ymin + region.height() * iy / (lattice_n - 1)};
            if ((p - anchor).norm() > 1e-9) lattice.push_back(p);
        }
    }

    double best = std::numeric_limits<double>::infinity();
    Eigen::Vector2d bj, bk;
    for (std::size_t a = 0; a < lattice.size(); ++a) {
        for (std::size_t b = a + 1; b < lattice.size(); ++b) {
            const double t =
                placement_score(anchor, lattice[a], lattice[b], var0, varj, vark)
                    .trace_cov;
            if (t < best) {
                best = t;
                bj = lattice[a];
                bk = lattice[b];
            }
        }
    }
    if (!std::isfinite(best))
        throw ConfigError("no non-collinear receiver pair on the lattice");

    nodes.receivers = {bj, bk};
    nodes.validate();
    return nodes;
}

}  // namespace isac
