#pragma once

// Domain types for probabilistic scoring lists and the pure prediction-time
// semantics: total score, stage lookup, interval lookup and the risk-averse
// decision rule.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "psl/error.hpp"

namespace psl {

/// Finite set of admissible nonzero integer scores.
class ScoreSet {
public:
    ScoreSet() = default;

    ScoreSet(std::vector<int> values, bool positive_only = false)
        : values_(std::move(values)), positive_only_(positive_only) {
        std::sort(values_.begin(), values_.end());
        values_.erase(std::unique(values_.begin(), values_.end()), values_.end());
        if (values_.empty()) throw InvalidArgument("score set must not be empty");
        if (std::find(values_.begin(), values_.end(), 0) != values_.end())
            throw InvalidArgument("score set must not contain 0");
        if (positive_only_ && values_.front() < 1)
            throw InvalidArgument("positive-only score set contains a non-positive score");
    }

    /// Symmetric set {±1, ..., ±max_abs}.
    static ScoreSet symmetric(int max_abs) {
        std::vector<int> v;
        for (int s = 1; s <= max_abs; ++s) {
            v.push_back(s);
            v.push_back(-s);
        }
        return ScoreSet(std::move(v));
    }

    /// Parses lists such as "±1,±2,±3", "+-1,2", "-2,-1,1,2" or "1,2,3".
    static ScoreSet parse(std::string_view text, bool positive_only = false) {
        std::vector<int> v;
        std::size_t pos = 0;
        while (pos <= text.size()) {
            std::size_t comma = text.find(',', pos);
            if (comma == std::string_view::npos) comma = text.size();
            std::string_view item = text.substr(pos, comma - pos);
            while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
            while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
            bool both = false;
            if (item.starts_with("\xC2\xB1")) {  // UTF-8 plus-minus sign
                both = true;
                item.remove_prefix(2);
            } else if (item.starts_with("+-") || item.starts_with("-+")) {
                both = true;
                item.remove_prefix(2);
            }
            if (item.empty()) throw InvalidArgument("empty entry in score list '" + std::string(text) + "'");
            std::string token(item);
            char* end = nullptr;
            long value = std::strtol(token.c_str(), &end, 10);
            if (end == token.c_str() || *end != '\0')
                throw InvalidArgument("invalid score '" + token + "'");
            v.push_back(static_cast<int>(value));
            if (both) v.push_back(static_cast<int>(-value));
            pos = comma + 1;
        }
        return ScoreSet(std::move(v), positive_only);
    }

    const std::vector<int>& values() const noexcept { return values_; }
    bool positive_only() const noexcept { return positive_only_; }

    int max_abs() const {
        int m = 0;
        for (int s : values_) m = std::max(m, std::abs(s));
        return m;
    }

    bool contains(int s) const { return std::binary_search(values_.begin(), values_.end(), s); }

    friend bool operator==(const ScoreSet&, const ScoreSet&) = default;

private:
    std::vector<int> values_{-3, -2, -1, 1, 2, 3};
    bool positive_only_ = false;
};

/// Closed probability interval.
struct Interval {
    double lower = 0.0;
    double upper = 1.0;

    bool contains(double p) const noexcept { return lower <= p && p <= upper; }
    friend bool operator==(const Interval&, const Interval&) = default;
};

/// Positive/negative example counts observed at one total score.
struct Counts {
    std::size_t positives = 0;
    std::size_t negatives = 0;

    std::size_t total() const noexcept { return positives + negatives; }
    friend bool operator==(const Counts&, const Counts&) = default;
};

/// Sorted set of all subset sums of `scores`: the reachable total scores.
inline std::vector<int> reachable_scores(std::span<const int> scores) {
    std::set<int> sums{0};
    for (int s : scores) {
        std::set<int> next = sums;
        for (int t : sums) next.insert(t + s);
        sums = std::move(next);
    }
    return {sums.begin(), sums.end()};
}

/// Per-stage table: reachable total scores and what is known at each of them.
/// `q_hat`, `band` and `support` are aligned with `sigma`; `q_hat` and `band`
/// are empty for ranking-only models.
struct StageTable {
    std::size_t stage = 0;
    std::vector<int> sigma;
    std::vector<double> q_hat;
    std::vector<Interval> band;
    std::vector<Counts> support;

    std::size_t index_of(int total) const {
        auto it = std::lower_bound(sigma.begin(), sigma.end(), total);
        if (it == sigma.end() || *it != total)
            throw InvalidArgument("total score " + std::to_string(total) + " is not reachable at stage " +
                                  std::to_string(stage));
        return static_cast<std::size_t>(it - sigma.begin());
    }

    bool has_probabilities() const noexcept { return !q_hat.empty(); }

    friend bool operator==(const StageTable&, const StageTable&) = default;
};

/// One position of the list: which feature, its score, and how raw values are binarized.
struct FeatureSpec {
    std::string name;
    int score = 1;
    /// Raw values strictly above the threshold binarize to 1. Absent for binary features.
    std::optional<double> threshold;

    friend bool operator==(const FeatureSpec&, const FeatureSpec&) = default;
};

/// A trained (or hand-written) probabilistic scoring list. Immutable after construction.
class ScoringList {
public:
    ScoringList(ScoreSet score_set, std::vector<FeatureSpec> features, std::vector<StageTable> stages,
                double cost_ratio = 10.0, double alpha = 0.5)
        : score_set_(std::move(score_set)),
          features_(std::move(features)),
          stages_(std::move(stages)),
          cost_ratio_(cost_ratio),
          alpha_(alpha) {
        validate();
    }

    const ScoreSet& score_set() const noexcept { return score_set_; }
    const std::vector<FeatureSpec>& features() const noexcept { return features_; }
    const std::vector<StageTable>& stages() const noexcept { return stages_; }
    const StageTable& stage(std::size_t k) const {
        if (k >= stages_.size())
            throw InvalidArgument("stage " + std::to_string(k) + " exceeds model length " +
                                  std::to_string(size()));
        return stages_[k];
    }
    /// Number of features K (stages run 0..K).
    std::size_t size() const noexcept { return features_.size(); }
    double cost_ratio() const noexcept { return cost_ratio_; }
    /// Significance level the stored bands were built at.
    double alpha() const noexcept { return alpha_; }
    bool ranking_only() const noexcept { return !stages_.front().has_probabilities(); }

    std::vector<int> scores() const {
        std::vector<int> s;
        s.reserve(features_.size());
        for (const auto& f : features_) s.push_back(f.score);
        return s;
    }

    std::optional<std::size_t> feature_index(std::string_view name) const {
        for (std::size_t i = 0; i < features_.size(); ++i)
            if (features_[i].name == name) return i;
        return std::nullopt;
    }

    friend bool operator==(const ScoringList&, const ScoringList&) = default;

private:
    void validate() const {
        if (!(cost_ratio_ > 0.0)) throw InvalidArgument("cost ratio must be positive");
        if (!(alpha_ > 0.0 && alpha_ < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
        std::set<std::string> names;
        for (const auto& f : features_) {
            if (!names.insert(f.name).second) throw InvalidArgument("duplicate feature '" + f.name + "'");
            if (f.score == 0) throw InvalidArgument("feature '" + f.name + "' has score 0");
        }
        if (stages_.size() != features_.size() + 1)
            throw InvalidArgument("a list of K features needs K+1 stage tables");
        const bool probabilistic = stages_.front().has_probabilities();
        std::vector<int> prefix;
        for (std::size_t k = 0; k < stages_.size(); ++k) {
            const StageTable& st = stages_[k];
            if (st.stage != k) throw InvalidArgument("stage tables out of order");
            if (k > 0) prefix.push_back(features_[k - 1].score);
            if (st.sigma != reachable_scores(prefix))
                throw InvalidArgument("stage " + std::to_string(k) + " does not list the reachable total scores");
            if (st.support.size() != st.sigma.size())
                throw InvalidArgument("stage " + std::to_string(k) + " support does not match its scores");
            if (st.has_probabilities() != probabilistic)
                throw InvalidArgument("either every stage or no stage carries probabilities");
            if (!probabilistic) continue;
            if (st.q_hat.size() != st.sigma.size() || st.band.size() != st.sigma.size())
                throw InvalidArgument("stage " + std::to_string(k) + " tables are misaligned");
            for (std::size_t i = 0; i < st.sigma.size(); ++i) {
                double q = st.q_hat[i];
                if (!(q >= 0.0 && q <= 1.0))
                    throw InvalidArgument("probability outside [0, 1] at stage " + std::to_string(k));
                if (i > 0 && q < st.q_hat[i - 1])
                    throw InvalidArgument("probabilities decrease with the total score at stage " +
                                          std::to_string(k));
                const Interval& b = st.band[i];
                if (!(b.lower >= 0.0 && b.upper <= 1.0 && b.lower <= q && q <= b.upper))
                    throw InvalidArgument("band does not cover the estimate at stage " + std::to_string(k));
            }
        }
    }

    ScoreSet score_set_;
    std::vector<FeatureSpec> features_;
    std::vector<StageTable> stages_;
    double cost_ratio_ = 10.0;
    double alpha_ = 0.5;
};

/// Binarizes a raw value for one feature: thresholded features compare
/// strictly above the threshold, binary features must already be 0 or 1.
inline int binarize_value(const FeatureSpec& feature, double value) {
    if (std::isnan(value)) throw InvalidArgument("missing value for feature '" + feature.name + "'");
    if (feature.threshold) return value > *feature.threshold ? 1 : 0;
    if (value == 0.0) return 0;
    if (value == 1.0) return 1;
    throw InvalidArgument("feature '" + feature.name + "' is binary but received " + std::to_string(value));
}

/// Total score after the first k features. `x[i]` holds the raw value of the
/// i-th feature of the list; entries past k are ignored and may be NaN.
inline int total_score(const ScoringList& model, std::span<const double> x, std::size_t k) {
    if (k > model.size()) throw InvalidArgument("stage " + std::to_string(k) + " exceeds model length");
    if (x.size() < k) throw InvalidArgument("input supplies fewer than " + std::to_string(k) + " values");
    int total = 0;
    for (std::size_t i = 0; i < k; ++i) {
        const FeatureSpec& f = model.features()[i];
        total += f.score * binarize_value(f, x[i]);
    }
    return total;
}

/// Feature values keyed by feature name.
using NamedValues = std::map<std::string, double, std::less<>>;

/// Aligns a name-keyed input with the model order. Unknown names are
/// rejected; features the input does not mention come back as NaN.
inline std::vector<double> align_input(const ScoringList& model, const NamedValues& x) {
    std::vector<double> aligned(model.size(), std::nan(""));
    for (const auto& [name, value] : x) {
        auto idx = model.feature_index(name);
        if (!idx) throw NotFound("unknown feature '" + name + "'");
        aligned[*idx] = value;
    }
    return aligned;
}

inline int total_score(const ScoringList& model, const NamedValues& x, std::size_t k) {
    return total_score(model, align_input(model, x), k);
}

inline double stage_probability(const ScoringList& model, std::size_t k, int total) {
    const StageTable& st = model.stage(k);
    if (!st.has_probabilities()) throw InvalidArgument("ranking-only model carries no probabilities");
    return st.q_hat[st.index_of(total)];
}

inline Interval stage_interval(const ScoringList& model, std::size_t k, int total) {
    const StageTable& st = model.stage(k);
    if (!st.has_probabilities()) throw InvalidArgument("ranking-only model carries no confidence band");
    return st.band[st.index_of(total)];
}

inline double predict_proba(const ScoringList& model, std::span<const double> x, std::size_t k) {
    return stage_probability(model, k, total_score(model, x, k));
}

inline double predict_proba(const ScoringList& model, const NamedValues& x, std::size_t k) {
    return predict_proba(model, align_input(model, x), k);
}

inline Interval predict_interval(const ScoringList& model, std::span<const double> x, std::size_t k) {
    return stage_interval(model, k, total_score(model, x, k));
}

inline Interval predict_interval(const ScoringList& model, const NamedValues& x, std::size_t k) {
    return predict_interval(model, align_input(model, x), k);
}

/// Risk-averse decision under cost ratio M (false negative costs M, false
/// positive costs 1): positive iff 1 - p < M p, i.e. iff p > 1 / (M + 1).
inline int decide(double p, double cost_ratio) {
    if (!(cost_ratio > 0.0)) throw InvalidArgument("cost ratio must be positive");
    return p > 1.0 / (cost_ratio + 1.0) ? 1 : 0;
}

/// Expected loss of the loss-minimizing decision under probability p.
inline double expected_decision_loss(double p, double cost_ratio) {
    if (!(cost_ratio > 0.0)) throw InvalidArgument("cost ratio must be positive");
    return std::min(1.0 - p, cost_ratio * p);
}

/// Expected loss of a fixed decision when the positive class has probability p.
inline double decision_loss(int decision, double p, double cost_ratio) {
    return decision == 1 ? 1.0 - p : cost_ratio * p;
}

}  // namespace psl
