#include "isac/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "isac/errors.hpp"
#include "isac/rng.hpp"

namespace isac::stats {

double mean(std::span<const double> xs) {
    if (xs.empty()) throw InputError("mean of empty sample");
    double acc = 0.0;
    for (double x : xs) acc += x;
    return acc / static_cast<double>(xs.size());
}

double sample_variance(std::span<const double> xs) {
    if (xs.size() < 2) throw InputError("variance needs at least two samples");
    const double m = mean(xs);
    double acc = 0.0;
    for (double x : xs) acc += (x - m) * (x - m);
    return acc / static_cast<double>(xs.size() - 1);
}

Ci bootstrap_ci_mean(std::span<const double> xs, double confidence,
                     int resamples, std::uint64_t seed) {
    if (xs.empty()) throw InputError("bootstrap of empty sample");
    if (confidence <= 0.0 || confidence >= 1.0)
        throw InputError("confidence must be in (0, 1)");

    Rng rng(seed);
    std::vector<double> means(static_cast<std::size_t>(resamples));
    for (auto& m : means) {
        double acc = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const std::size_t j =
                static_cast<std::size_t>(rng.next_u64() % xs.size());
            acc += xs[j];
        }
        m = acc / static_cast<double>(xs.size());
    }
    std::sort(means.begin(), means.end());
    const double alpha = 0.5 * (1.0 - confidence);
    const auto pick = [&](double p) {
        const double pos = p * static_cast<double>(means.size() - 1);
        const std::size_t i = static_cast<std::size_t>(pos);
        const double frac = pos - static_cast<double>(i);
        if (i + 1 >= means.size()) return means.back();
        return means[i] * (1.0 - frac) + means[i + 1] * frac;
    };
    return Ci{pick(alpha), pick(1.0 - alpha)};
}

double q_function(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

namespace {

// Continued fraction for the incomplete beta function (Lentz).
double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-16;
    constexpr double kFpMin = 1e-300;

    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double front =
        std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                 a * std::log(x) + b * std::log1p(-x));
    if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double dof) {
    if (dof <= 0.0) throw InputError("t distribution needs dof > 0");
    if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
    const double x = dof / (dof + t * t);
    const double p = 0.5 * incomplete_beta(0.5 * dof, 0.5, x);
    return t > 0.0 ? 1.0 - p : p;
}

double paired_t_pvalue_greater(std::span<const double> diffs) {
    if (diffs.size() < 2) throw InputError("paired test needs >= 2 pairs");
    const double m = mean(diffs);
    const double var = sample_variance(diffs);
    if (var <= 0.0) {
        // Degenerate sample: all differences equal.
        return m > 0.0 ? 0.0 : 1.0;
    }
    const double n = static_cast<double>(diffs.size());
    const double t = m / std::sqrt(var / n);
    return 1.0 - student_t_cdf(t, n - 1.0);
}

}  // namespace isac::stats
