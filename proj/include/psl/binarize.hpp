#pragma once

// Threshold selection for numeric features. A feature value binarizes to 1
// when it lies strictly above the threshold. Candidate thresholds are the
// mid-points between consecutive distinct values plus a sentinel above the
// maximum, which maps every value to 0 and so lets a feature be ignored.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "psl/entropy.hpp"
#include "psl/error.hpp"

namespace psl {

enum class SearchStrategy { brute, bisect };
enum class BinarizationMode { preprocess, in_search };

inline const char* to_string(SearchStrategy s) { return s == SearchStrategy::brute ? "brute" : "bisect"; }
inline const char* to_string(BinarizationMode m) {
    return m == BinarizationMode::preprocess ? "preprocess" : "in_search";
}

struct ThresholdChoice {
    std::string feature;
    double threshold = 0.0;
    std::size_t candidate_index = 0;
    bool sentinel = false;
    double entropy = 0.0;  ///< objective value at the chosen threshold
    SearchStrategy strategy = SearchStrategy::brute;
    BinarizationMode mode = BinarizationMode::preprocess;
    std::size_t evaluations = 0;
};

/// Result of minimizing an objective over candidate indices 0..n-1.
struct SearchResult {
    std::size_t index = 0;
    double value = 0.0;
    std::size_t evaluations = 0;
};

/// Evaluates every index; ties go to the smallest index.
template <class Objective>
SearchResult brute_argmin(std::size_t n, Objective&& objective) {
    if (n == 0) throw InvalidArgument("no candidates to search");
    SearchResult best{0, objective(std::size_t{0}), 1};
    for (std::size_t i = 1; i < n; ++i) {
        const double v = objective(i);
        ++best.evaluations;
        if (v < best.value) {
            best.index = i;
            best.value = v;
        }
    }
    return best;
}

/// Hierarchical binary search over candidate indices. Starts from both ends
/// and the middle; each round takes every current minimum (all of them on
/// ties) and evaluates the mid-points towards its nearest evaluated
/// neighbours, until no unevaluated mid-point remains. Exact whenever the
/// objective is quasi-convex in the index; ties go to the smallest index.
template <class Objective>
SearchResult bisect_argmin(std::size_t n, Objective&& objective) {
    if (n == 0) throw InvalidArgument("no candidates to search");
    std::map<std::size_t, double> seen;
    auto evaluate = [&](std::size_t i) {
        if (!seen.contains(i)) seen.emplace(i, objective(i));
    };
    evaluate(0);
    evaluate(n - 1);
    evaluate((n - 1) / 2);
    while (true) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& [_, v] : seen) best = std::min(best, v);
        std::vector<std::size_t> fresh;
        for (auto it = seen.begin(); it != seen.end(); ++it) {
            if (it->second != best) continue;
            if (it != seen.begin()) {
                auto prev = std::prev(it);
                if (it->first - prev->first > 1) fresh.push_back(prev->first + (it->first - prev->first) / 2);
            }
            auto next = std::next(it);
            if (next != seen.end() && next->first - it->first > 1)
                fresh.push_back(it->first + (next->first - it->first) / 2);
        }
        std::size_t added = 0;
        for (std::size_t i : fresh) {
            if (!seen.contains(i)) {
                evaluate(i);
                ++added;
            }
        }
        if (added == 0) break;
    }
    SearchResult result{0, std::numeric_limits<double>::infinity(), seen.size()};
    for (const auto& [i, v] : seen) {
        if (v < result.value) {
            result.index = i;
            result.value = v;
        }
    }
    return result;
}

template <class Objective>
SearchResult search_argmin(SearchStrategy strategy, std::size_t n, Objective&& objective) {
    return strategy == SearchStrategy::brute ? brute_argmin(n, objective) : bisect_argmin(n, objective);
}

namespace detail {

inline double midpoint_between(double lo, double hi) {
    double mid = lo + (hi - lo) / 2.0;
    if (!(mid < hi)) mid = lo;
    return mid;
}

inline double sentinel_above(double max) {
    double s = max + 1.0;
    if (!(s > max)) s = std::nextafter(max, std::numeric_limits<double>::infinity());
    return s;
}

}  // namespace detail

/// Mid-points between consecutive distinct values, then the sentinel max + 1.
inline std::vector<double> candidate_thresholds(std::span<const double> values) {
    if (values.empty()) throw InvalidArgument("threshold candidates need at least one value");
    std::vector<double> v(values.begin(), values.end());
    for (double x : v)
        if (std::isnan(x)) throw InvalidArgument("threshold candidates cannot be built from missing values");
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    std::vector<double> out;
    out.reserve(v.size());
    for (std::size_t i = 0; i + 1 < v.size(); ++i) out.push_back(detail::midpoint_between(v[i], v[i + 1]));
    out.push_back(detail::sentinel_above(v.back()));
    return out;
}

/// Candidate thresholds of one column together with, per example, the
/// position of its value among the distinct values. Example e binarizes to 1
/// under candidate i iff group[e] > i.
class ThresholdCandidates {
public:
    explicit ThresholdCandidates(std::span<const double> values) : thresholds_(candidate_thresholds(values)) {
        std::vector<double> distinct(values.begin(), values.end());
        std::sort(distinct.begin(), distinct.end());
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        group_.reserve(values.size());
        members_.resize(distinct.size());
        for (std::size_t e = 0; e < values.size(); ++e) {
            auto g = static_cast<std::size_t>(std::lower_bound(distinct.begin(), distinct.end(), values[e]) -
                                              distinct.begin());
            group_.push_back(g);
            members_[g].push_back(e);
        }
    }

    std::size_t size() const noexcept { return thresholds_.size(); }
    double threshold(std::size_t i) const { return thresholds_.at(i); }
    bool is_sentinel(std::size_t i) const noexcept { return i + 1 == thresholds_.size(); }
    const std::vector<double>& thresholds() const noexcept { return thresholds_; }
    std::size_t group(std::size_t example) const { return group_[example]; }
    /// Examples whose value is the g-th smallest distinct value.
    const std::vector<std::size_t>& members(std::size_t g) const { return members_[g]; }
    std::size_t examples() const noexcept { return group_.size(); }

    std::vector<std::uint8_t> binarize(std::size_t i) const {
        std::vector<std::uint8_t> out(group_.size());
        for (std::size_t e = 0; e < group_.size(); ++e) out[e] = group_[e] > i ? 1 : 0;
        return out;
    }

private:
    std::vector<double> thresholds_;
    std::vector<std::size_t> group_;
    std::vector<std::vector<std::size_t>> members_;
};

namespace detail {

inline void check_labels(std::span<const int> labels, std::size_t n) {
    if (labels.size() != n) throw InvalidArgument("values and labels differ in length");
    for (int y : labels)
        if (y != 0 && y != 1) throw InvalidArgument("labels must be 0 or 1");
}

// Per-total-score counts over a contiguous score range; entropy is summed
// in increasing score order so every evaluation path agrees bit for bit.
struct ScoreHistogram {
    int lo = 0;
    std::vector<double> count;
    std::vector<double> positives;

    ScoreHistogram(int lo_, int hi_) : lo(lo_), count(hi_ - lo_ + 1, 0.0), positives(hi_ - lo_ + 1, 0.0) {}

    void add(int score, int label, double w = 1.0) {
        count[score - lo] += w;
        positives[score - lo] += w * label;
    }

    double entropy(double total) const {
        double sum = 0.0;
        for (std::size_t i = 0; i < count.size(); ++i) {
            if (count[i] == 0.0) continue;
            sum += count[i] / total * binary_entropy(positives[i] / count[i]);
        }
        return sum;
    }
};

}  // namespace detail

/// Independent threshold for one numeric feature: minimizes the expected
/// entropy of the two-way split {value <= t, value > t}.
inline ThresholdChoice preprocess_threshold(std::span<const double> values, std::span<const int> labels,
                                            SearchStrategy strategy, std::string feature = {}) {
    detail::check_labels(labels, values.size());
    const ThresholdCandidates cands(values);
    const std::size_t groups = cands.size();  // one group per distinct value
    std::vector<double> group_count(groups, 0.0);
    std::vector<double> group_pos(groups, 0.0);
    for (std::size_t e = 0; e < values.size(); ++e) {
        group_count[cands.group(e)] += 1.0;
        group_pos[cands.group(e)] += labels[e];
    }
    std::vector<double> cum_count(groups);
    std::vector<double> cum_pos(groups);
    std::partial_sum(group_count.begin(), group_count.end(), cum_count.begin());
    std::partial_sum(group_pos.begin(), group_pos.end(), cum_pos.begin());
    const double total = cum_count.back();
    const double total_pos = cum_pos.back();

    auto objective = [&](std::size_t i) {
        const double n_le = cum_count[i];
        const double p_le = cum_pos[i];
        const double n_gt = total - n_le;
        const double p_gt = total_pos - p_le;
        const EntropyGroup g[2] = {{n_gt, n_gt > 0 ? p_gt / n_gt : 0.0}, {n_le, n_le > 0 ? p_le / n_le : 0.0}};
        return expected_entropy(g, total);
    };
    const SearchResult r = search_argmin(strategy, groups, objective);
    return {std::move(feature), cands.threshold(r.index), r.index, cands.is_sentinel(r.index), r.value,
            strategy, BinarizationMode::preprocess, r.evaluations};
}

/// Threshold of the k-th feature chosen jointly with the list built so far:
/// `prior_totals[e]` is example e's total score after k-1 stages, and the
/// objective is the expected entropy of the stage-k score bins under
/// relative-frequency estimates.
inline ThresholdChoice in_search_threshold(std::span<const int> prior_totals, const ThresholdCandidates& cands,
                                           int score, std::span<const int> labels, SearchStrategy strategy,
                                           std::string feature = {}) {
    const std::size_t n = prior_totals.size();
    detail::check_labels(labels, n);
    if (cands.examples() != n) throw InvalidArgument("candidate column and totals differ in length");
    if (n == 0) throw InvalidArgument("threshold search needs at least one example");
    const auto [min_it, max_it] = std::minmax_element(prior_totals.begin(), prior_totals.end());
    const int lo = *min_it - std::abs(score);
    const int hi = *max_it + std::abs(score);
    const double total = static_cast<double>(n);

    auto direct = [&](std::size_t i) {
        detail::ScoreHistogram h(lo, hi);
        for (std::size_t e = 0; e < n; ++e) h.add(prior_totals[e] + (cands.group(e) > i ? score : 0), labels[e]);
        return h.entropy(total);
    };

    SearchResult r;
    if (strategy == SearchStrategy::bisect) {
        r = bisect_argmin(cands.size(), direct);
    } else {
        // Sweep from the sentinel (all zero) downwards, moving one value group
        // at a time into the "above threshold" side.
        const std::size_t m = cands.size();
        std::vector<double> value(m);
        detail::ScoreHistogram h(lo, hi);
        for (std::size_t e = 0; e < n; ++e) h.add(prior_totals[e], labels[e]);
        value[m - 1] = h.entropy(total);
        for (std::size_t i = m - 1; i-- > 0;) {
            for (std::size_t e : cands.members(i + 1)) {
                h.add(prior_totals[e], labels[e], -1.0);
                h.add(prior_totals[e] + score, labels[e]);
            }
            value[i] = h.entropy(total);
        }
        r = brute_argmin(m, [&](std::size_t i) { return value[i]; });
    }
    return {std::move(feature), cands.threshold(r.index), r.index, cands.is_sentinel(r.index), r.value,
            strategy, BinarizationMode::in_search, r.evaluations};
}

inline ThresholdChoice in_search_threshold(std::span<const int> prior_totals, std::span<const double> values,
                                           int score, std::span<const int> labels, SearchStrategy strategy,
                                           std::string feature = {}) {
    return in_search_threshold(prior_totals, ThresholdCandidates(values), score, labels, strategy,
                               std::move(feature));
}

}  // namespace psl
