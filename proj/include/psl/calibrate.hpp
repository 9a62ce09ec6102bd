#pragma once

// Joint monotone estimation of P(y = 1 | total score) from (score, label)
// pairs: isotonic regression via pool-adjacent-violators, and beta
// calibration fitted by projected gradient descent on log-loss.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <variant>
#include <vector>

#include "psl/error.hpp"

namespace psl {

struct CalibrationPair {
    int score = 0;
    int label = 0;
};

using CalibrationData = std::vector<CalibrationPair>;

/// Calibration pairs aggregated per distinct score, ordered by score.
struct ScoreBin {
    int score = 0;
    double weight = 0.0;
    double positives = 0.0;
};

inline std::vector<ScoreBin> aggregate(const CalibrationData& data) {
    std::map<int, ScoreBin> bins;
    for (const auto& [score, label] : data) {
        if (label != 0 && label != 1) throw InvalidArgument("calibration labels must be 0 or 1");
        ScoreBin& b = bins[score];
        b.score = score;
        b.weight += 1.0;
        b.positives += label;
    }
    std::vector<ScoreBin> out;
    out.reserve(bins.size());
    for (auto& [_, b] : bins) out.push_back(b);
    return out;
}

struct IsotonicKnot {
    int score = 0;
    double value = 0.0;
};

/// Nondecreasing piecewise-linear map through the fitted knots; clamped
/// outside the knot range.
struct IsotonicFit {
    std::vector<IsotonicKnot> knots;
};

/// Weighted pool-adjacent-violators on (value, weight) sequences already
/// sorted by score. Returns the fitted value per input position.
inline std::vector<double> pool_adjacent_violators(const std::vector<double>& values, const std::vector<double>& weights) {
    struct Block {
        double sum;
        double weight;
        std::size_t count;
    };
    std::vector<Block> blocks;
    blocks.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        blocks.push_back({values[i] * weights[i], weights[i], 1});
        while (blocks.size() > 1) {
            const Block& last = blocks.back();
            const Block& prev = blocks[blocks.size() - 2];
            // prev.mean > last.mean, cross-multiplied to avoid division
            if (prev.sum * last.weight <= last.sum * prev.weight) break;
            Block merged{prev.sum + last.sum, prev.weight + last.weight, prev.count + last.count};
            blocks.pop_back();
            blocks.back() = merged;
        }
    }
    std::vector<double> fitted;
    fitted.reserve(values.size());
    for (const Block& b : blocks) fitted.insert(fitted.end(), b.count, b.sum / b.weight);
    return fitted;
}

inline IsotonicFit fit_isotonic(const CalibrationData& data) {
    if (data.empty()) throw InvalidArgument("isotonic calibration needs at least one pair");
    const auto bins = aggregate(data);
    std::vector<double> means;
    std::vector<double> weights;
    for (const auto& b : bins) {
        means.push_back(b.positives / b.weight);
        weights.push_back(b.weight);
    }
    const auto fitted = pool_adjacent_violators(means, weights);
    IsotonicFit fit;
    for (std::size_t i = 0; i < bins.size(); ++i) fit.knots.push_back({bins[i].score, fitted[i]});
    return fit;
}

/// Affine map of the score range [lo, hi] onto [eps, 1 - eps].
struct TauMap {
    int lo = 0;
    int hi = 1;
    double eps = 1e-6;

    double operator()(int score) const {
        if (hi == lo) return 0.5;
        const double u = static_cast<double>(score - lo) / static_cast<double>(hi - lo);
        return eps + (1.0 - 2.0 * eps) * u;
    }
};

/// Beta calibration q(tau) = 1 / (1 + m^a (1-m)^-b tau^-a (1-tau)^b), a, b >= 0, 0 < m < 1.
struct BetaFit {
    double a = 1.0;
    double b = 1.0;
    double m = 0.5;
    TauMap tau_map;
    std::size_t iterations = 0;
};

inline double beta_calibration(double a, double b, double m, double tau) {
    const double ratio = std::pow(m / tau, a) * std::pow((1.0 - tau) / (1.0 - m), b);
    return 1.0 / (1.0 + ratio);
}

namespace detail {

inline double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

inline double logistic(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

struct BetaProblem {
    std::vector<double> log_tau;
    std::vector<double> log_one_minus_tau;
    std::vector<double> weight;
    std::vector<double> positives;
    double total_weight = 0.0;

    // Parameters are (a, b, mu) with m = logistic(mu).
    double loss(double a, double b, double mu) const {
        const double log_m = -softplus(-mu);
        const double log_1m = -softplus(mu);
        double sum = 0.0;
        for (std::size_t i = 0; i < weight.size(); ++i) {
            const double z = a * (log_tau[i] - log_m) - b * (log_one_minus_tau[i] - log_1m);
            // -[p log q + (w - p) log(1 - q)]
            sum += positives[i] * softplus(-z) + (weight[i] - positives[i]) * softplus(z);
        }
        return sum / total_weight;
    }

    void gradient(double a, double b, double mu, double g[3]) const {
        const double m = logistic(mu);
        const double log_m = -softplus(-mu);
        const double log_1m = -softplus(mu);
        g[0] = g[1] = g[2] = 0.0;
        for (std::size_t i = 0; i < weight.size(); ++i) {
            const double z = a * (log_tau[i] - log_m) - b * (log_one_minus_tau[i] - log_1m);
            const double r = (weight[i] * logistic(z) - positives[i]) / total_weight;
            g[0] += r * (log_tau[i] - log_m);
            g[1] += r * (log_1m - log_one_minus_tau[i]);
            g[2] += r * (-a * (1.0 - m) - b * m);
        }
    }
};

}  // namespace detail

/// Fits beta calibration by projected gradient descent with backtracking,
/// starting from a = b = 1 and m = base rate. `tau_map` defaults to the
/// range of scores present in the data.
inline BetaFit fit_beta(const CalibrationData& data, std::optional<TauMap> tau_map = std::nullopt, double tol = 1e-8,
                        std::size_t max_iter = 10000) {
    if (data.empty()) throw InvalidArgument("beta calibration needs at least one pair");
    const auto bins = aggregate(data);
    double pos = 0.0;
    double total = 0.0;
    for (const auto& b : bins) {
        pos += b.positives;
        total += b.weight;
    }
    if (pos == 0.0 || pos == total) throw DataError("degenerate calibration data: only one class present");

    BetaFit fit;
    fit.tau_map = tau_map.value_or(TauMap{bins.front().score, bins.back().score});
    detail::BetaProblem prob;
    prob.total_weight = total;
    for (const auto& b : bins) {
        const double tau = fit.tau_map(b.score);
        prob.log_tau.push_back(std::log(tau));
        prob.log_one_minus_tau.push_back(std::log1p(-tau));
        prob.weight.push_back(b.weight);
        prob.positives.push_back(b.positives);
    }

    static constexpr double mu_bound = 30.0;
    auto project = [](double& a, double& b, double& mu) {
        a = std::max(a, 0.0);
        b = std::max(b, 0.0);
        mu = std::clamp(mu, -mu_bound, mu_bound);
    };

    const double base = pos / total;
    double a = 1.0;
    double b = 1.0;
    double mu = std::log(base / (1.0 - base));
    double loss = prob.loss(a, b, mu);
    double step = 1.0;
    std::size_t iter = 0;
    for (; iter < max_iter; ++iter) {
        double g[3];
        prob.gradient(a, b, mu, g);
        bool accepted = false;
        double na = a, nb = b, nmu = mu, nloss = loss;
        for (int bt = 0; bt < 60; ++bt) {
            na = a - step * g[0];
            nb = b - step * g[1];
            nmu = mu - step * g[2];
            project(na, nb, nmu);
            const double da = na - a, db = nb - b, dmu = nmu - mu;
            const double lin = g[0] * da + g[1] * db + g[2] * dmu;
            const double quad = (da * da + db * db + dmu * dmu) / (2.0 * step);
            nloss = prob.loss(na, nb, nmu);
            if (nloss <= loss + lin + quad) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
        const double da = na - a, db = nb - b, dmu = nmu - mu;
        const double mapping_norm = std::sqrt(da * da + db * db + dmu * dmu) / step;
        a = na;
        b = nb;
        mu = nmu;
        loss = nloss;
        if (mapping_norm < tol) {
            ++iter;
            break;
        }
        step *= 2.0;
    }
    fit.a = a;
    fit.b = b;
    fit.m = detail::logistic(mu);
    fit.iterations = iter;
    return fit;
}

/// Mean log-loss of a beta fit on calibration data; exposed for oracle checks.
inline double beta_log_loss(const CalibrationData& data, double a, double b, double m, const TauMap& tau_map) {
    double sum = 0.0;
    for (const auto& [score, label] : data) {
        const double q = std::clamp(beta_calibration(a, b, m, tau_map(score)), 1e-300, 1.0 - 1e-16);
        sum -= label ? std::log(q) : std::log1p(-q);
    }
    return sum / static_cast<double>(data.size());
}

using CalibrationFit = std::variant<IsotonicFit, BetaFit>;

inline double predict_calibrated(const IsotonicFit& fit, int score) {
    const auto& k = fit.knots;
    if (k.empty()) throw InvalidArgument("isotonic fit has no knots");
    if (score <= k.front().score) return k.front().value;
    if (score >= k.back().score) return k.back().value;
    auto hi = std::lower_bound(k.begin(), k.end(), score,
                               [](const IsotonicKnot& knot, int s) { return knot.score < s; });
    if (hi->score == score) return hi->value;
    auto lo = hi - 1;
    const double w = static_cast<double>(score - lo->score) / static_cast<double>(hi->score - lo->score);
    return lo->value + w * (hi->value - lo->value);
}

inline double predict_calibrated(const BetaFit& fit, int score) {
    return beta_calibration(fit.a, fit.b, fit.m, fit.tau_map(score));
}

inline double predict_calibrated(const CalibrationFit& fit, int score) {
    return std::visit([score](const auto& f) { return predict_calibrated(f, score); }, fit);
}

}  // namespace psl
