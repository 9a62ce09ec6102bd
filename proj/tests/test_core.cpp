#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "psl/core.hpp"
#include "support/oracles.hpp"

using namespace psl;
using psl::testing::worked_example_cell;
using psl::testing::worked_example_model;

TEST(ScoreSet, ParsesSymmetricAndPlainLists) {
    EXPECT_EQ(ScoreSet::parse("\xC2\xB1" "1,\xC2\xB1" "2,\xC2\xB1" "3").values(), (std::vector<int>{-3, -2, -1, 1, 2, 3}));
    EXPECT_EQ(ScoreSet::parse("+-1, 2").values(), (std::vector<int>{-1, 1, 2}));
    EXPECT_EQ(ScoreSet::parse("1,2,3", true).values(), (std::vector<int>{1, 2, 3}));
    EXPECT_EQ(ScoreSet::symmetric(2).values(), (std::vector<int>{-2, -1, 1, 2}));
    EXPECT_EQ(ScoreSet().values(), ScoreSet::symmetric(3).values());
}

TEST(ScoreSet, RejectsZeroEmptyAndBadTokens) {
    EXPECT_THROW(ScoreSet({0, 1}), InvalidArgument);
    EXPECT_THROW(ScoreSet(std::vector<int>{}), InvalidArgument);
    EXPECT_THROW(ScoreSet::parse("1,,2"), InvalidArgument);
    EXPECT_THROW(ScoreSet::parse("1,x"), InvalidArgument);
    EXPECT_THROW(ScoreSet({-1, 2}, true), InvalidArgument);
}

TEST(ReachableScores, MatchesSubsetSums) {
    EXPECT_EQ(reachable_scores({}), std::vector<int>{0});
    const std::vector<int> s{1, -2, 1, 2};
    EXPECT_EQ(reachable_scores(std::span(s).first(1)), (std::vector<int>{0, 1}));
    EXPECT_EQ(reachable_scores(std::span(s).first(2)), (std::vector<int>{-2, -1, 0, 1}));
    EXPECT_EQ(reachable_scores(std::span(s).first(3)), (std::vector<int>{-2, -1, 0, 1, 2}));
    EXPECT_EQ(reachable_scores(s), (std::vector<int>{-2, -1, 0, 1, 2, 3, 4}));
}

TEST(ReachableScores, EqualsBruteForceOnRandomLists) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t k = psl::testing::uniform_index(rng, 0, 8);
        std::vector<int> s(k);
        for (int& v : s) v = static_cast<int>(psl::testing::uniform_index(rng, 1, 6)) * (rng() % 2 ? 1 : -1);
        std::set<int> brute;
        for (std::uint32_t mask = 0; mask < (1U << k); ++mask) {
            int t = 0;
            for (std::size_t i = 0; i < k; ++i)
                if (mask >> i & 1U) t += s[i];
            brute.insert(t);
        }
        EXPECT_EQ(reachable_scores(s), std::vector<int>(brute.begin(), brute.end()));
    }
}

TEST(ScoringList, WorkedExampleCells) {
    const ScoringList m = worked_example_model();
    EXPECT_EQ(m.size(), 4u);
    const std::vector<double> all_ones{1, 1, 1, 1};  // list order f3, f1, f2, f4
    EXPECT_EQ(total_score(m, all_ones, 4), 2);
    EXPECT_DOUBLE_EQ(predict_proba(m, all_ones, 4), 0.7);
    // f1 = 0, f2 = 1, f3 = 1 after three stages
    const NamedValues partial{{"f1", 0.0}, {"f2", 1.0}, {"f3", 1.0}};
    EXPECT_EQ(total_score(m, partial, 3), 2);
    EXPECT_DOUBLE_EQ(predict_proba(m, partial, 3), 0.9);
    EXPECT_DOUBLE_EQ(predict_proba(m, NamedValues{}, 0), 0.3);
    EXPECT_DOUBLE_EQ(worked_example_cell(0, 0), 0.3);
}

TEST(ScoringList, ValidatesStructure) {
    auto good = worked_example_model();
    std::vector<StageTable> stages = good.stages();
    stages[2].q_hat[1] = 0.05;  // breaks monotonicity
    stages[2].band[1] = {0.0, 1.0};
    EXPECT_THROW(ScoringList(good.score_set(), good.features(), stages), InvalidArgument);

    stages = good.stages();
    stages[1].sigma = {0, 2};
    EXPECT_THROW(ScoringList(good.score_set(), good.features(), stages), InvalidArgument);

    stages = good.stages();
    stages.pop_back();
    EXPECT_THROW(ScoringList(good.score_set(), good.features(), stages), InvalidArgument);

    auto dup = good.features();
    dup[1].name = "f3";
    EXPECT_THROW(ScoringList(good.score_set(), dup, good.stages()), InvalidArgument);

    stages = good.stages();
    stages[3].band[2] = {0.7, 0.8};  // does not cover 0.6
    EXPECT_THROW(ScoringList(good.score_set(), good.features(), stages), InvalidArgument);
}

TEST(Prediction, RejectsBadInputs) {
    const ScoringList m = worked_example_model();
    const std::vector<double> x{1, 0.5, 1, 1};
    EXPECT_THROW(total_score(m, x, 2), InvalidArgument);
    EXPECT_EQ(total_score(m, x, 1), 1);  // entries beyond k are ignored
    EXPECT_THROW(total_score(m, x, 5), InvalidArgument);
    EXPECT_THROW(predict_proba(m, NamedValues{{"f9", 1.0}}, 1), NotFound);
    EXPECT_THROW(predict_proba(m, NamedValues{{"f1", 1.0}}, 1), InvalidArgument);  // f3 missing
    EXPECT_THROW(m.stage(0).index_of(5), InvalidArgument);
}

TEST(Prediction, ThresholdedFeatureUsesStrictComparison) {
    FeatureSpec f{"age", 1, 50.0};
    EXPECT_EQ(binarize_value(f, 50.0), 0);
    EXPECT_EQ(binarize_value(f, 50.5), 1);
    EXPECT_THROW(binarize_value(f, std::nan("")), InvalidArgument);
}

TEST(Decision, BoundaryIsStrict) {
    EXPECT_EQ(decide(1.0 / 11.0, 10.0), 0);
    EXPECT_EQ(decide(std::nextafter(1.0 / 11.0, 1.0), 10.0), 1);
    EXPECT_EQ(decide(0.5, 1.0), 0);
    EXPECT_EQ(decide(0.51, 1.0), 1);
    EXPECT_THROW(decide(0.5, 0.0), InvalidArgument);
}

TEST(Decision, ExpectedLossIsMinimumOfBothChoices) {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 1000; ++i) {
        const double p = psl::testing::uniform(rng);
        const double m = psl::testing::uniform(rng, 0.1, 50.0);
        const double both = std::min(decision_loss(1, p, m), decision_loss(0, p, m));
        EXPECT_DOUBLE_EQ(expected_decision_loss(p, m), both);
        EXPECT_DOUBLE_EQ(decision_loss(decide(p, m), p, m), both);
    }
}
