#pragma once

// Regularized incomplete beta function and its inverse. Used for exact
// binomial (Clopper-Pearson) bounds, so the inverse is solved to near machine
// precision rather than approximated.

#include <cmath>
#include <limits>

#include "psl/error.hpp"

namespace psl::special {

namespace detail {

// Modified Lentz evaluation of the continued fraction for I_x(a, b).
inline double beta_continued_fraction(double a, double b, double x) {
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-16;
    constexpr int max_iter = 10000;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) return h;
    }
    return h;
}

inline double log_beta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

}  // namespace detail

/// Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1].
inline double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw InvalidArgument("incomplete beta requires a, b > 0");
    if (!(x >= 0.0 && x <= 1.0)) throw InvalidArgument("incomplete beta requires x in [0, 1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double log_front = a * std::log(x) + b * std::log1p(-x) - detail::log_beta(a, b);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_continued_fraction(a, b, x) / a;
    return 1.0 - front * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

/// Density of the Beta(a, b) distribution.
inline double beta_density(double a, double b, double x) {
    if (x <= 0.0 || x >= 1.0) return 0.0;
    return std::exp((a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - detail::log_beta(a, b));
}

/// Inverse of I_x(a, b) in x: the p-quantile of Beta(a, b).
/// Safeguarded Newton iteration inside a shrinking bisection bracket.
inline double incomplete_beta_inverse(double a, double b, double p) {
    if (!(a > 0.0) || !(b > 0.0)) throw InvalidArgument("beta quantile requires a, b > 0");
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("beta quantile requires p in [0, 1]");
    if (p == 0.0) return 0.0;
    if (p == 1.0) return 1.0;

    double lo = 0.0;
    double hi = 1.0;
    double x = a / (a + b);
    for (int iter = 0; iter < 300; ++iter) {
        const double f = incomplete_beta(a, b, x) - p;
        if (f == 0.0) return x;
        if (f < 0.0)
            lo = x;
        else
            hi = x;
        if (hi - lo <= 1e-15 * std::max(1.0, x)) break;

        const double dens = beta_density(a, b, x);
        double next = (dens > 0.0 && std::isfinite(dens)) ? x - f / dens : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::fabs(next - x) <= 1e-16 * std::max(1.0, x)) {
            x = next;
            break;
        }
        x = next;
    }
    return x;
}

}  // namespace psl::special
