#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "psl/binarize.hpp"
#include "psl/learn.hpp"
#include "support/oracles.hpp"

using namespace psl;
namespace t = psl::testing;

namespace {

std::vector<double> random_values(std::mt19937_64& rng, std::size_t n, int levels) {
    std::vector<double> v(n);
    for (double& x : v) x = static_cast<double>(t::uniform_index(rng, 0, static_cast<std::size_t>(levels))) * 0.5;
    return v;
}

std::vector<int> noisy_labels(std::mt19937_64& rng, const std::vector<double>& v) {
    std::vector<int> y(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) y[i] = t::uniform(rng) < 0.2 + 0.6 * std::sin(v[i]) * std::sin(v[i]);
    return y;
}

}  // namespace

TEST(Candidates, MidpointsAndSentinel) {
    const std::vector<double> v{3.0, 1.0, 2.0, 1.0};
    EXPECT_EQ(candidate_thresholds(v), (std::vector<double>{1.5, 2.5, 4.0}));
    ThresholdCandidates c(v);
    EXPECT_EQ(c.size(), 3u);
    EXPECT_TRUE(c.is_sentinel(2));
    EXPECT_EQ(c.binarize(0), (std::vector<std::uint8_t>{1, 0, 1, 0}));
    EXPECT_EQ(c.binarize(2), (std::vector<std::uint8_t>{0, 0, 0, 0}));
}

TEST(Preprocess, BruteMatchesDirectOracle) {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 100; ++trial) {
        const auto v = random_values(rng, t::uniform_index(rng, 2, 150), 12);
        const auto y = noisy_labels(rng, v);
        const auto brute = preprocess_threshold(v, y, SearchStrategy::brute);
        EXPECT_NEAR(brute.entropy, t::best_threshold_entropy(v, y), 1e-12);
        const auto bisect = preprocess_threshold(v, y, SearchStrategy::bisect);
        EXPECT_LE(brute.entropy, bisect.entropy);
        EXPECT_LE(bisect.evaluations, brute.evaluations);
    }
}

TEST(Preprocess, SeparableFeatureGivesZeroEntropy) {
    const std::vector<double> v{1, 2, 3, 4, 10, 11, 12};
    const std::vector<int> y{0, 0, 0, 0, 1, 1, 1};
    for (auto s : {SearchStrategy::brute, SearchStrategy::bisect}) {
        const auto c = preprocess_threshold(v, y, s);
        EXPECT_EQ(c.entropy, 0.0);
        EXPECT_DOUBLE_EQ(c.threshold, 7.0);
    }
}

TEST(Preprocess, TiesGoToSmallerThreshold) {
    // every split has zero entropy
    const std::vector<double> v{1, 2, 3};
    const std::vector<int> y{0, 0, 0};
    const auto c = preprocess_threshold(v, y, SearchStrategy::brute);
    EXPECT_EQ(c.candidate_index, 0u);
    EXPECT_DOUBLE_EQ(c.threshold, 1.5);
}

TEST(Preprocess, InvariantUnderMonotoneTransform) {
    std::mt19937_64 rng(32);
    for (int trial = 0; trial < 50; ++trial) {
        const auto v = random_values(rng, 80, 15);
        const auto y = noisy_labels(rng, v);
        std::vector<double> w(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) w[i] = std::exp(v[i]) * 3.0 - 7.0;
        for (auto s : {SearchStrategy::brute, SearchStrategy::bisect}) {
            const auto a = preprocess_threshold(v, y, s);
            const auto b = preprocess_threshold(w, y, s);
            for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(v[i] > a.threshold, w[i] > b.threshold);
        }
    }
}

TEST(Bisect, ExactOnQuasiConvexSequences) {
    std::mt19937_64 rng(33);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = t::uniform_index(rng, 1, 500);
        const std::size_t mode = t::uniform_index(rng, 0, n - 1);
        std::vector<double> f(n);
        f[mode] = t::uniform(rng);
        for (std::size_t i = mode; i-- > 0;) f[i] = f[i + 1] + (rng() % 3 == 0 ? 0.0 : t::uniform(rng));
        for (std::size_t i = mode + 1; i < n; ++i) f[i] = f[i - 1] + (rng() % 3 == 0 ? 0.0 : t::uniform(rng));
        auto obj = [&](std::size_t i) { return f[i]; };
        EXPECT_EQ(bisect_argmin(n, obj).value, brute_argmin(n, obj).value);
    }
}

TEST(Bisect, LogarithmicEvaluationsOnStrictlyUnimodal) {
    std::mt19937_64 rng(34);
    for (std::size_t n : {2u, 10u, 1000u, 100000u}) {
        for (int trial = 0; trial < 20; ++trial) {
            const double c = t::uniform(rng, 0.0, static_cast<double>(n - 1));
            auto obj = [&](std::size_t i) { return std::fabs(static_cast<double>(i) - c) + 1e-9 * static_cast<double>(i); };
            const auto r = bisect_argmin(n, obj);
            EXPECT_EQ(r.index, brute_argmin(n, obj).index);
            EXPECT_LE(r.evaluations, 3 + 2 * static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(n)))));
        }
    }
}

TEST(InSearch, BruteSweepEqualsDirectEvaluation) {
    std::mt19937_64 rng(35);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t n = t::uniform_index(rng, 2, 120);
        const auto v = random_values(rng, n, 10);
        const auto y = noisy_labels(rng, v);
        std::vector<int> prior(n);
        for (int& p : prior) p = static_cast<int>(t::uniform_index(rng, 0, 4)) - 2;
        const int score = rng() % 2 ? 2 : -1;
        const auto brute = in_search_threshold(prior, v, score, y, SearchStrategy::brute);
        double best = std::numeric_limits<double>::infinity();
        for (double thr : candidate_thresholds(v)) {
            std::vector<int> next(n);
            for (std::size_t i = 0; i < n; ++i) next[i] = prior[i] + (v[i] > thr ? score : 0);
            best = std::min(best, t::partition_entropy(next, y));
        }
        EXPECT_NEAR(brute.entropy, best, 1e-12);
        const auto bisect = in_search_threshold(prior, v, score, y, SearchStrategy::bisect);
        EXPECT_LE(brute.entropy, bisect.entropy);
        // the sentinel keeps the prior partition available
        EXPECT_LE(brute.entropy, t::partition_entropy(prior, y) + 1e-12);
    }
}

TEST(BinarizeDataset, ThresholdsNumericColumnsOnly) {
    std::mt19937_64 rng(36);
    const Dataset d = t::mixed_dataset(rng, 100, 2, 2);
    const auto b = binarize_dataset(d, SearchStrategy::brute);
    ASSERT_EQ(b.choices.size(), 4u);
    EXPECT_FALSE(b.choices[0]);
    EXPECT_TRUE(b.choices[3]);
    for (const auto& c : b.data.columns()) EXPECT_EQ(c.kind, ColumnKind::binary);
    for (std::size_t i = 0; i < d.rows(); ++i) EXPECT_EQ(b.data.at(i, 3), d.at(i, 3) > b.choices[3]->threshold ? 1.0 : 0.0);
}
