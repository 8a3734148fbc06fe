#pragma once
// Independent reference implementations for the tests: dense matrix
// constructions straight from the definitions, brute-force searches, and
// alternative algebraic routes. None of these share code with the library's
// computation paths.

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

namespace oracle {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

inline constexpr double kPi = std::numbers::pi;

// Unitary DFT, F[a,b] = exp(-j*2*pi*a*b/n)/sqrt(n).
inline Mat dft(int n) {
    Mat f(n, n);
    const double root = 1.0 / std::sqrt(static_cast<double>(n));
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            f(a, b) = root * std::polar(1.0, -2.0 * kPi * a * b / n);
    return f;
}

inline Mat kron(const Mat& a, const Mat& b) {
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) =
                a(i, j) * b;
    return out;
}

// Cyclic forward shift: (Pi x)[n] = x[(n-1) mod total].
inline Mat pi_pow(int total, long l) {
    Mat p = Mat::Zero(total, total);
    for (int n = 0; n < total; ++n) {
        const int src = static_cast<int>(((n - l) % total + total) % total);
        p(n, src) = 1.0;
    }
    return p;
}

inline Mat delta_pow(int total, double k) {
    Mat d = Mat::Zero(total, total);
    for (int n = 0; n < total; ++n)
        d(n, n) = std::polar(1.0, 2.0 * kPi * k * n / total);
    return d;
}

inline Mat tx_transform(int m, int n) {  // (F_N^H kron I_M)
    return kron(dft(n).adjoint(), Mat::Identity(m, m));
}

inline Mat rx_transform(int m, int n) {  // (F_N kron I_M)
    return kron(dft(n), Mat::Identity(m, m));
}

inline Mat dd_operator_dense(int m, int n, long l, double k) {
    const int total = m * n;
    return rx_transform(m, n) * pi_pow(total, l) * delta_pow(total, k) *
           tx_transform(m, n);
}

// Gauss-Newton on the three range equations ||p - node_q|| = rho_q.
inline std::optional<Eigen::Vector2d> gauss_newton_position(
    double rho0, double rhoj, double rhok, const Eigen::Vector2d& anchor,
    const Eigen::Vector2d& rj, const Eigen::Vector2d& rk,
    Eigen::Vector2d init = {0.0, 0.0}, int iters = 100) {
    const Eigen::Vector2d nodes[3] = {anchor, rj, rk};
    const double rho[3] = {rho0, rhoj, rhok};
    Eigen::Vector2d p = init;
    for (int it = 0; it < iters; ++it) {
        Eigen::Matrix<double, 3, 2> jac;
        Eigen::Vector3d res;
        for (int q = 0; q < 3; ++q) {
            const Eigen::Vector2d d = p - nodes[q];
            const double dist = d.norm();
            if (dist < 1e-12) return std::nullopt;
            res(q) = dist - rho[q];
            jac.row(q) = (d / dist).transpose();
        }
        const Eigen::Matrix2d jtj = jac.transpose() * jac;
        if (std::abs(jtj.determinant()) < 1e-12) return std::nullopt;
        const Eigen::Vector2d step = jtj.inverse() * (jac.transpose() * res);
        p -= step;
        if (step.norm() < 1e-14) break;
    }
    return p;
}

// Scalar Kalman posterior variance via the information form.
inline double scalar_riccati_step(double p, double t, double q, double r) {
    const double pf = t * t * p + q;
    return 1.0 / (1.0 / pf + 1.0 / r);
}

// Literal re-implementation of the neighbor-set definitions.
inline Eigen::Vector2d nn_select_naive(std::span<const Eigen::Vector2d> c,
                                       double xi) {
    std::vector<std::vector<std::size_t>> sets(c.size());
    for (std::size_t n = 0; n < c.size(); ++n)
        for (std::size_t m = 0; m < c.size(); ++m)
            if (m != n && (c[n] - c[m]).norm() <= xi) sets[n].push_back(m);
    std::size_t star = 0;
    for (std::size_t n = 1; n < c.size(); ++n)
        if (sets[n].size() > sets[star].size()) star = n;
    Eigen::Vector2d sum = c[star];
    for (std::size_t m : sets[star]) sum += c[m];
    return sum / static_cast<double>(sets[star].size() + 1);
}

}  // namespace oracle
