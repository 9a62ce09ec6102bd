#include <gtest/gtest.h>

#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <random>

#include "psl/special_functions.hpp"
#include "psl/uncertainty.hpp"
#include "support/oracles.hpp"

using namespace psl;
namespace t = psl::testing;

TEST(IncompleteBeta, AgreesWithBoost) {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 2000; ++i) {
        const double a = t::uniform(rng, 0.2, 300.0);
        const double b = t::uniform(rng, 0.2, 300.0);
        const double x = t::uniform(rng);
        EXPECT_NEAR(special::incomplete_beta(a, b, x), boost::math::ibeta(a, b, x), 1e-12) << a << ' ' << b << ' ' << x;
    }
}

TEST(IncompleteBeta, InverseRoundTrips) {
    std::mt19937_64 rng(12);
    for (int i = 0; i < 500; ++i) {
        const double a = t::uniform(rng, 0.5, 100.0);
        const double b = t::uniform(rng, 0.5, 100.0);
        const double p = t::uniform(rng, 1e-6, 1.0 - 1e-6);
        const double x = special::incomplete_beta_inverse(a, b, p);
        EXPECT_NEAR(x, boost::math::ibeta_inv(a, b, p), 1e-10);
    }
}

TEST(ClopperPearson, EdgeCases) {
    const Interval none = clopper_pearson(0, 0, 0.05);
    EXPECT_EQ(none.lower, 0.0);
    EXPECT_EQ(none.upper, 1.0);
    const Interval all = clopper_pearson(7, 0, 0.05);
    EXPECT_EQ(all.upper, 1.0);
    EXPECT_NEAR(all.lower, std::pow(0.025, 1.0 / 7.0), 1e-12);
    EXPECT_THROW(clopper_pearson(1, 1, 0.0), InvalidArgument);
    EXPECT_THROW(clopper_pearson(1, 1, 1.0), InvalidArgument);
}

TEST(ClopperPearson, MatchesOracleAtModerateCounts) {
    std::mt19937_64 rng(13);
    for (int i = 0; i < 300; ++i) {
        const std::size_t p = t::uniform_index(rng, 0, 400);
        const std::size_t n = t::uniform_index(rng, 0, 400);
        const double alpha = t::uniform(rng, 0.001, 0.5);
        const Interval iv = clopper_pearson(p, n, alpha);
        const auto [lo, hi] = t::clopper_pearson_oracle(p, n, alpha);
        EXPECT_NEAR(iv.lower, lo, 1e-9);
        EXPECT_NEAR(iv.upper, hi, 1e-9);
        EXPECT_LE(iv.lower, iv.upper);
    }
}

TEST(Band, MonotoneStepNeverWidensAndCoverStepOnlyWidens) {
    std::mt19937_64 rng(14);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t m = t::uniform_index(rng, 1, 8);
        std::vector<Counts> counts(m);
        std::vector<double> q(m);
        for (std::size_t i = 0; i < m; ++i) {
            counts[i] = {t::uniform_index(rng, 0, 30), t::uniform_index(rng, 0, 30)};
            q[i] = t::uniform(rng);
        }
        std::sort(q.begin(), q.end());
        const ConfidenceBand b = build_band(counts, q, 0.1);
        for (std::size_t i = 0; i < m; ++i) {
            EXPECT_GE(b.monotone[i].lower, b.raw[i].lower);
            EXPECT_LE(b.monotone[i].upper, b.raw[i].upper);
            EXPECT_LE(b.covering[i].lower, q[i]);
            EXPECT_GE(b.covering[i].upper, q[i]);
            EXPECT_LE(b.covering[i].lower, b.monotone[i].lower);
            EXPECT_GE(b.covering[i].upper, b.monotone[i].upper);
            EXPECT_EQ(b.inconsistent[i], b.monotone[i].lower > b.monotone[i].upper);
            if (i > 0) {
                EXPECT_LE(b.covering[i - 1].lower, b.covering[i].lower);
                EXPECT_LE(b.covering[i - 1].upper, b.covering[i].upper);
            }
        }
    }
}

TEST(Band, UsesBonferroniLevel) {
    const std::vector<Counts> counts{{3, 7}, {5, 5}, {8, 2}};
    const std::vector<double> q{0.3, 0.5, 0.8};
    const ConfidenceBand b = build_band(counts, q, 0.3);
    for (std::size_t i = 0; i < 3; ++i) {
        const auto [lo, hi] = t::clopper_pearson_oracle(counts[i].positives, counts[i].negatives, 0.1);
        EXPECT_NEAR(b.raw[i].lower, lo, 1e-12);
        EXPECT_NEAR(b.raw[i].upper, hi, 1e-12);
    }
}

TEST(Band, MapFormRequiresMatchingKeys) {
    std::map<int, Counts> c{{0, {1, 1}}, {1, {2, 0}}};
    std::map<int, double> q{{0, 0.5}, {2, 1.0}};
    EXPECT_THROW(build_band(c, q, 0.1), InvalidArgument);
    q = {{0, 0.5}, {1, 1.0}};
    EXPECT_EQ(build_band(c, q, 0.1).covering.size(), 2u);
}
