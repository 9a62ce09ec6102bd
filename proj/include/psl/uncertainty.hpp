#pragma once

// Epistemic uncertainty per total score: exact binomial intervals,
// Bonferroni-corrected simultaneous bands, monotone tightening and the final
// widening that makes the band cover the calibrated estimates.

#include <algorithm>
#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "psl/core.hpp"
#include "psl/error.hpp"
#include "psl/special_functions.hpp"

namespace psl {

/// Clopper-Pearson interval for P positives among P + N trials at level 1 - alpha.
inline Interval clopper_pearson(std::size_t positives, std::size_t negatives, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
    const double p = static_cast<double>(positives);
    const double n = static_cast<double>(negatives);
    Interval iv{0.0, 1.0};
    if (positives > 0) iv.lower = special::incomplete_beta_inverse(p, n + 1.0, alpha / 2.0);
    if (negatives > 0) iv.upper = special::incomplete_beta_inverse(p + 1.0, n, 1.0 - alpha / 2.0);
    return iv;
}

/// Band over the sorted total scores of one stage, in three refinement steps.
struct ConfidenceBand {
    double alpha = 0.05;
    std::vector<Interval> raw;        ///< per-score intervals at level 1 - alpha / |scores|
    std::vector<Interval> monotone;   ///< running max of lowers from the left, min of uppers from the right
    std::vector<Interval> covering;   ///< monotone band widened to contain the point estimates
    std::vector<bool> inconsistent;   ///< monotone lower exceeded monotone upper
};

/// Builds the band for aligned per-score counts and estimates (ordered by
/// increasing total score).
inline ConfidenceBand build_band(std::span<const Counts> counts, std::span<const double> q_hat, double alpha) {
    if (counts.size() != q_hat.size()) throw InvalidArgument("counts and estimates cover different scores");
    if (counts.empty()) throw InvalidArgument("band needs at least one total score");
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
    const std::size_t n = counts.size();
    ConfidenceBand band;
    band.alpha = alpha;
    band.raw.reserve(n);
    const double level = alpha / static_cast<double>(n);
    for (const Counts& c : counts) band.raw.push_back(clopper_pearson(c.positives, c.negatives, level));

    band.monotone = band.raw;
    for (std::size_t i = 1; i < n; ++i)
        band.monotone[i].lower = std::max(band.monotone[i].lower, band.monotone[i - 1].lower);
    for (std::size_t i = n - 1; i-- > 0;)
        band.monotone[i].upper = std::min(band.monotone[i].upper, band.monotone[i + 1].upper);

    band.covering.resize(n);
    band.inconsistent.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        band.inconsistent[i] = band.monotone[i].lower > band.monotone[i].upper;
        band.covering[i] = {std::min(band.monotone[i].lower, q_hat[i]), std::max(band.monotone[i].upper, q_hat[i])};
    }
    return band;
}

/// Map-keyed form; both maps must cover the same total scores.
inline ConfidenceBand build_band(const std::map<int, Counts>& counts, const std::map<int, double>& q_hat,
                                 double alpha) {
    if (counts.size() != q_hat.size()) throw InvalidArgument("counts and estimates cover different scores");
    std::vector<Counts> c;
    std::vector<double> q;
    auto qi = q_hat.begin();
    for (auto ci = counts.begin(); ci != counts.end(); ++ci, ++qi) {
        if (ci->first != qi->first) throw InvalidArgument("counts and estimates cover different scores");
        c.push_back(ci->second);
        q.push_back(qi->second);
    }
    return build_band(c, q, alpha);
}

/// Re-derives the covering band of a stored stage at another significance level.
inline std::vector<Interval> stage_band(const StageTable& stage, double alpha) {
    if (!stage.has_probabilities()) throw InvalidArgument("ranking-only stage carries no estimates");
    return build_band(stage.support, stage.q_hat, alpha).covering;
}

}  // namespace psl
