#pragma once

#include <cstdint>
#include <span>

namespace isac::stats {

double mean(std::span<const double> xs);
double sample_variance(std::span<const double> xs);  // unbiased, n-1

struct Ci {
    double lo = 0.0, hi = 0.0;
};

// Percentile bootstrap for the mean; deterministic given the seed.
Ci bootstrap_ci_mean(std::span<const double> xs, double confidence,
                     int resamples, std::uint64_t seed);

// Gaussian tail probability Q(x) = P(Z > x).
double q_function(double x);

// Regularized incomplete beta function I_x(a, b).
double incomplete_beta(double a, double b, double x);

// CDF of Student's t with dof degrees of freedom.
double student_t_cdf(double t, double dof);

// One-sided paired test, H1: mean(diffs) > 0. Returns the p-value.
double paired_t_pvalue_greater(std::span<const double> diffs);

}  // namespace isac::stats
