#include <gtest/gtest.h>

#include <random>

#include "psl/eval.hpp"
#include "support/oracles.hpp"

using namespace psl;
namespace t = psl::testing;

namespace {

Dataset worked_example_data() {
    std::vector<Column> cols{{"f1", ColumnKind::binary}, {"f2", ColumnKind::binary},
                             {"f3", ColumnKind::binary}, {"f4", ColumnKind::binary}};
    std::vector<double> v;
    std::vector<int> y;
    for (int x = 0; x < 16; ++x) {
        for (int j = 0; j < 4; ++j) v.push_back((x >> j) & 1);
        y.push_back(x % 3 == 0 ? 1 : 0);
    }
    return Dataset(cols, v, y);
}

}  // namespace

TEST(Metrics, MatchDirectComputationOnWorkedExample) {
    const ScoringList m = t::worked_example_model();
    const Dataset d = worked_example_data();
    for (std::size_t k = 0; k <= 4; ++k) {
        double b = 0.0;
        std::vector<double> q(16);
        for (std::size_t i = 0; i < 16; ++i) {
            // list order f3, f1, f2, f4 with scores +1, -2, +1, +2
            const double x1 = d.at(i, 0), x2 = d.at(i, 1), x3 = d.at(i, 2), x4 = d.at(i, 3);
            const double contrib[4] = {x3, -2 * x1, x2, 2 * x4};
            int total = 0;
            for (std::size_t j = 0; j < k; ++j) total += static_cast<int>(contrib[j]);
            q[i] = t::worked_example_cell(k, total);
            b += (q[i] - d.label(i)) * (q[i] - d.label(i));
        }
        EXPECT_NEAR(brier(m, d, k), b / 16.0, 1e-15);
        double h = 0.0;
        for (double p : q) h += t::h2(p) / 16.0;
        EXPECT_NEAR(test_entropy(m, d, k), h, 1e-12);
    }
    EXPECT_DOUBLE_EQ(auc(m, d, 0), 0.5);
}

TEST(Metrics, SrlEqualsOneMinusAuc) {
    std::mt19937_64 rng(61);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = t::uniform_index(rng, 4, 60);
        std::vector<int> y(n);
        std::vector<double> s(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = static_cast<int>(i % 2);
            s[i] = static_cast<double>(t::uniform_index(rng, 0, 5));
        }
        const auto pairs = complete_pairs(y);
        EXPECT_NEAR(soft_rank_loss(std::span<const double>(s), std::span<const PreferencePair>(pairs)),
                    1.0 - auc(std::span<const double>(s), std::span<const int>(y)), 1e-12);
    }
}

TEST(Metrics, LabelledRankLossMatchesPairwiseDefinition) {
    std::mt19937_64 rng(62);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = t::uniform_index(rng, 4, 60);
        std::vector<int> y(n), s(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = i < 2 ? static_cast<int>(i) : static_cast<int>(rng() % 2);
            s[i] = static_cast<int>(t::uniform_index(rng, 0, 6)) - 3;
        }
        const auto pairs = complete_pairs(y);
        EXPECT_NEAR(labelled_rank_loss(s, y),
                    soft_rank_loss(std::span<const int>(s), std::span<const PreferencePair>(pairs)), 1e-12);
    }
}

TEST(ExpectedLoss, PointModeUsesUpperBoundDecision) {
    std::mt19937_64 rng(63);
    const Dataset d = t::logistic_binary(rng, 300, {1.5, 0.5}, -1.0);
    const ScoringList m = greedy_fit(d, FitConfig{});
    const auto curve = expected_loss_curve(m, d, 10.0, 0.5);
    const auto totals = stage_totals(m, d);
    for (std::size_t k = 0; k <= m.size(); ++k) {
        const auto band = build_band(m.stage(k).support, m.stage(k).q_hat, 0.5).covering;
        double sum = 0.0;
        for (std::size_t i = 0; i < d.rows(); ++i) {
            const std::size_t idx = m.stage(k).index_of(totals[k][i]);
            const double q = m.stage(k).q_hat[idx];
            sum += band[idx].upper > 1.0 / 11.0 ? 1.0 - q : 10.0 * q;
        }
        EXPECT_NEAR(curve[k], sum / 300.0, 1e-12);
    }
    const auto worst = expected_loss_curve(m, d, 10.0, 0.5, LossMode::worst_case);
    for (std::size_t k = 0; k < worst.size(); ++k) EXPECT_GE(worst[k], curve[k] - 1e-12);
}

TEST(Summary, NormalIntervalOfTheMean) {
    const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
    const StageSummary s = summarize(v, 2);
    EXPECT_DOUBLE_EQ(s.mean, 2.5);
    EXPECT_NEAR(s.half_width, 1.959963984540054 * std::sqrt(5.0 / 3.0) / 2.0, 1e-15);
    EXPECT_EQ(summarize(std::vector<double>{0.7}, 0).half_width, 0.0);
}

TEST(Summary, ShorterCurvesCarryForward) {
    std::vector<std::map<Metric, std::vector<double>>> curves{{{Metric::auc, {0.5, 0.7, 0.8}}},
                                                              {{Metric::auc, {0.5, 0.9}}}};
    const auto agg = aggregate_curves(curves);
    ASSERT_EQ(agg.at(Metric::auc).size(), 3u);
    EXPECT_DOUBLE_EQ(agg.at(Metric::auc)[2].mean, 0.85);
}

TEST(Mccv, SplitsAreDeterministicAndSized) {
    std::mt19937_64 rng(64);
    const Dataset d = t::logistic_binary(rng, 90, {1.0, 1.0}, 0.0);
    MccvOptions o;
    o.n_splits = 5;
    o.seed = 9;
    const auto a = mccv_splits(d, o);
    EXPECT_EQ(a, mccv_splits(d, o));
    for (const auto& s : a) EXPECT_EQ(s.size(), 60u);
    o.stratified = true;
    for (const auto& s : mccv_splits(d, o)) {
        std::size_t pos = 0;
        for (auto i : s) pos += d.label(i);
        EXPECT_NEAR(static_cast<double>(pos), d.positives() * 2.0 / 3.0, 1.0);
    }
}

TEST(Mccv, IndependentOfJobCount) {
    std::mt19937_64 rng(65);
    const Dataset d = t::mixed_dataset(rng, 150, 2, 1);
    MccvOptions o;
    o.n_splits = 6;
    o.seed = 3;
    o.jobs = 1;
    const auto a = mccv(d, FitConfig{}, o);
    o.jobs = 3;
    const auto b = mccv(d, FitConfig{}, o);
    for (const auto& [metric, stages] : a.metrics)
        for (std::size_t k = 0; k < stages.size(); ++k) {
            EXPECT_EQ(stages[k].mean, b.metrics.at(metric)[k].mean);
            EXPECT_EQ(stages[k].half_width, b.metrics.at(metric)[k].half_width);
        }
    EXPECT_EQ(a.metrics.size(), 4u);
    EXPECT_THROW(mccv(d, FitConfig{}, MccvOptions{.n_splits = 0}), InvalidArgument);
}
