#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "psl/error.hpp"

namespace psl {

/// Ordered pair (preferred, other) of instance indices.
using PreferencePair = std::pair<std::size_t, std::size_t>;

/// Penalty of one preference: 0 if the preferred instance scores higher,
/// 0.5 on a tie, 1 if it scores lower.
inline double pair_penalty(double preferred, double other) {
    if (preferred > other) return 0.0;
    if (preferred == other) return 0.5;
    return 1.0;
}

/// Mean pair penalty over the given preferences.
template <class Score>
double soft_rank_loss(std::span<const Score> scores, std::span<const PreferencePair> pairs) {
    if (pairs.empty()) throw InvalidArgument("soft rank loss needs at least one pair");
    double sum = 0.0;
    for (const auto& [a, b] : pairs) {
        if (a >= scores.size() || b >= scores.size()) throw InvalidArgument("pair references a missing instance");
        sum += pair_penalty(static_cast<double>(scores[a]), static_cast<double>(scores[b]));
    }
    return sum / static_cast<double>(pairs.size());
}

/// Area under the ROC curve (Mann-Whitney statistic, ties count one half).
template <class Score>
double auc(std::span<const Score> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw InvalidArgument("scores and labels differ in length");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    double positives = 0.0;
    double negatives = 0.0;
    // Twice the sum of positive ranks, kept integral while ties are averaged.
    double twice_rank_sum = 0.0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        double tie_pos = 0.0;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            if (labels[order[j]] != 0 && labels[order[j]] != 1) throw InvalidArgument("labels must be 0 or 1");
            tie_pos += labels[order[j]];
            ++j;
        }
        // ranks i+1..j average to (i+1+j)/2
        twice_rank_sum += tie_pos * static_cast<double>(i + 1 + j);
        positives += tie_pos;
        negatives += static_cast<double>(j - i) - tie_pos;
        i = j;
    }
    if (positives == 0.0 || negatives == 0.0) throw InvalidArgument("AUC needs both classes");
    const double u = twice_rank_sum / 2.0 - positives * (positives + 1.0) / 2.0;
    return u / (positives * negatives);
}

/// Every (positive, negative) index pair of a labelled sample.
inline std::vector<PreferencePair> complete_pairs(std::span<const int> labels) {
    std::vector<std::size_t> pos;
    std::vector<std::size_t> neg;
    for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] ? pos : neg).push_back(i);
    std::vector<PreferencePair> out;
    out.reserve(pos.size() * neg.size());
    for (std::size_t p : pos)
        for (std::size_t n : neg) out.emplace_back(p, n);
    return out;
}

}  // namespace psl
