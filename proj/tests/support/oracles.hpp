#pragma once

// Independent reference implementations and data generators used by the
// unit and acceptance tests. Nothing here calls into the library's numeric
// routines; each oracle recomputes its quantity from first principles.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/special_functions/beta.hpp>

#include "psl/core.hpp"
#include "psl/dataset.hpp"

namespace psl::testing {

// ---------------------------------------------------------------------------
// Worked example: four features, scores +1, -2, +1, +2 in list order f3, f1, f2, f4.

/// Reference probabilities by stage, indexed by T + 2 over T = -2..4; NaN marks
/// totals that cannot occur at that stage.
inline double worked_example_cell(std::size_t stage, int total) {
    constexpr double n = std::numeric_limits<double>::quiet_NaN();
    static const double cells[5][7] = {
        {n, n, 0.3, n, n, n, n},
        {n, n, 0.2, 0.4, n, n, n},
        {0.1, 0.2, 0.5, 0.6, n, n, n},
        {0.1, 0.2, 0.6, 0.7, 0.9, n, n},
        {0.1, 0.1, 0.2, 0.6, 0.7, 0.9, 0.9},
    };
    if (stage > 4 || total < -2 || total > 4) return n;
    return cells[stage][total + 2];
}

inline ScoringList worked_example_model() {
    std::vector<FeatureSpec> features{{"f3", 1, std::nullopt}, {"f1", -2, std::nullopt},
                                      {"f2", 1, std::nullopt}, {"f4", 2, std::nullopt}};
    const std::vector<std::vector<int>> sigma{{0}, {0, 1}, {-2, -1, 0, 1}, {-2, -1, 0, 1, 2}, {-2, -1, 0, 1, 2, 3, 4}};
    std::vector<StageTable> stages;
    for (std::size_t k = 0; k < sigma.size(); ++k) {
        StageTable st;
        st.stage = k;
        st.sigma = sigma[k];
        for (int t : sigma[k]) {
            st.q_hat.push_back(worked_example_cell(k, t));
            st.band.push_back({0.0, 1.0});
            st.support.push_back({0, 0});
        }
        stages.push_back(std::move(st));
    }
    return ScoringList(ScoreSet({-2, -1, 1, 2}), std::move(features), std::move(stages), 10.0, 0.5);
}

// ---------------------------------------------------------------------------
// Isotonic regression: exact optimum by enumerating every split of the
// ordered points into consecutive blocks.

inline std::vector<double> isotonic_oracle(const std::vector<double>& y, const std::vector<double>& w) {
    const std::size_t n = y.size();
    std::vector<double> best;
    double best_sse = std::numeric_limits<double>::infinity();
    const std::uint64_t masks = n == 0 ? 1 : (std::uint64_t{1} << (n - 1));
    for (std::uint64_t mask = 0; mask < masks; ++mask) {
        std::vector<double> fit(n);
        double prev_mean = -std::numeric_limits<double>::infinity();
        bool monotone = true;
        std::size_t start = 0;
        for (std::size_t i = 0; i < n && monotone; ++i) {
            const bool cut = i + 1 == n || (mask >> i) & 1U;
            if (!cut) continue;
            double sw = 0.0, swy = 0.0;
            for (std::size_t j = start; j <= i; ++j) {
                sw += w[j];
                swy += w[j] * y[j];
            }
            const double mean = swy / sw;
            if (mean < prev_mean) monotone = false;
            for (std::size_t j = start; j <= i; ++j) fit[j] = mean;
            prev_mean = mean;
            start = i + 1;
        }
        if (!monotone) continue;
        double sse = 0.0;
        for (std::size_t j = 0; j < n; ++j) sse += w[j] * (fit[j] - y[j]) * (fit[j] - y[j]);
        if (sse < best_sse) {
            best_sse = sse;
            best = fit;
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Clopper-Pearson bounds via Boost's incomplete beta inverse.

inline std::pair<double, double> clopper_pearson_oracle(std::size_t p, std::size_t n, double alpha) {
    const double lo = p == 0 ? 0.0 : boost::math::ibeta_inv(double(p), double(n) + 1.0, alpha / 2.0);
    const double hi = n == 0 ? 1.0 : boost::math::ibeta_inv(double(p) + 1.0, double(n), 1.0 - alpha / 2.0);
    return {lo, hi};
}

// ---------------------------------------------------------------------------
// Entropy of a labelled partition, counted directly.

inline double h2(double q) {
    if (q <= 0.0 || q >= 1.0) return 0.0;
    return -q * std::log2(q) - (1.0 - q) * std::log2(1.0 - q);
}

template <class Key>
double partition_entropy(const std::vector<Key>& group, const std::vector<int>& labels) {
    std::map<Key, std::pair<double, double>> c;  // count, positives
    for (std::size_t i = 0; i < group.size(); ++i) {
        c[group[i]].first += 1.0;
        c[group[i]].second += labels[i];
    }
    double h = 0.0;
    for (const auto& [_, v] : c) h += v.first / double(group.size()) * h2(v.second / v.first);
    return h;
}

/// Minimum entropy over every threshold "value > t" at midpoints between
/// distinct values and above the maximum.
inline double best_threshold_entropy(const std::vector<double>& values, const std::vector<int>& labels) {
    std::vector<double> d(values);
    std::sort(d.begin(), d.end());
    d.erase(std::unique(d.begin(), d.end()), d.end());
    std::vector<double> cands;
    for (std::size_t i = 0; i + 1 < d.size(); ++i) cands.push_back((d[i] + d[i + 1]) / 2.0);
    cands.push_back(d.back() + 1.0);
    double best = std::numeric_limits<double>::infinity();
    for (double t : cands) {
        std::vector<int> g(values.size());
        for (std::size_t i = 0; i < values.size(); ++i) g[i] = values[i] > t;
        best = std::min(best, partition_entropy(g, labels));
    }
    return best;
}

// ---------------------------------------------------------------------------
// Generators

inline double uniform(std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

/// Labels drawn from a logistic model over binary features with the given
/// weights; feature j is present with probability `rate[j]`.
inline Dataset logistic_binary(std::mt19937_64& rng, std::size_t n, const std::vector<double>& weights,
                               double intercept, double rate = 0.5) {
    const std::size_t d = weights.size();
    std::vector<Column> cols;
    for (std::size_t j = 0; j < d; ++j) cols.push_back({"x" + std::to_string(j + 1), ColumnKind::binary});
    std::vector<double> values(n * d);
    std::vector<int> labels(n);
    std::bernoulli_distribution present(rate);
    for (std::size_t i = 0; i < n; ++i) {
        double z = intercept;
        for (std::size_t j = 0; j < d; ++j) {
            values[i * d + j] = present(rng) ? 1.0 : 0.0;
            z += weights[j] * values[i * d + j];
        }
        labels[i] = uniform(rng) < 1.0 / (1.0 + std::exp(-z)) ? 1 : 0;
    }
    return Dataset(std::move(cols), std::move(values), std::move(labels));
}

/// Mixed data: `binary` binary columns then `numeric` numeric columns, the
/// label depending on every column through a logistic link.
inline Dataset mixed_dataset(std::mt19937_64& rng, std::size_t n, std::size_t binary, std::size_t numeric) {
    const std::size_t d = binary + numeric;
    std::vector<Column> cols;
    std::vector<double> w(d);
    for (std::size_t j = 0; j < d; ++j) {
        const bool is_bin = j < binary;
        cols.push_back({(is_bin ? "b" : "v") + std::to_string(j), is_bin ? ColumnKind::binary : ColumnKind::numeric});
        w[j] = uniform(rng, -2.0, 2.0);
    }
    std::vector<double> values(n * d);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        double z = uniform(rng, -0.5, 0.5);
        for (std::size_t j = 0; j < d; ++j) {
            double v = j < binary ? (uniform(rng) < 0.4 ? 1.0 : 0.0) : std::round(uniform(rng, 0.0, 20.0) * 4.0) / 4.0;
            values[i * d + j] = v;
            z += w[j] * (j < binary ? v : (v - 10.0) / 5.0);
        }
        labels[i] = uniform(rng) < 1.0 / (1.0 + std::exp(-z)) ? 1 : 0;
    }
    labels[0] = 0;
    labels[1] = 1;
    return Dataset(std::move(cols), std::move(values), std::move(labels));
}

}  // namespace psl::testing
