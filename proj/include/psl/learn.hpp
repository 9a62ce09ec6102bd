#pragma once

// Greedy construction of probabilistic scoring lists. Each stage appends the
// (feature, score[, threshold]) combination that minimizes the objective on
// the training data; afterwards every stage is calibrated and banded.
// An exhaustive enumerator over small instances serves as the reference
// for how close the greedy curve gets to the stagewise optimum.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "psl/binarize.hpp"
#include "psl/calibrate.hpp"
#include "psl/core.hpp"
#include "psl/dataset.hpp"
#include "psl/entropy.hpp"
#include "psl/error.hpp"
#include "psl/parallel.hpp"
#include "psl/ranking.hpp"
#include "psl/uncertainty.hpp"

namespace psl {

enum class Calibrator { isotonic, beta };
enum class Objective { expected_entropy, soft_rank_loss };

inline const char* to_string(Calibrator c) { return c == Calibrator::isotonic ? "isotonic" : "beta"; }
inline const char* to_string(Objective o) {
    return o == Objective::expected_entropy ? "expected_entropy" : "soft_rank_loss";
}

struct FitConfig {
    ScoreSet score_set = ScoreSet::symmetric(3);
    Calibrator calibrator = Calibrator::isotonic;
    BinarizationMode binarization = BinarizationMode::in_search;
    SearchStrategy strategy = SearchStrategy::bisect;
    Objective objective = Objective::expected_entropy;
    /// Number of stages to build; all candidate features when unset.
    std::optional<std::size_t> max_stages;
    /// Stop once the best candidate improves the objective by no more than
    /// this amount. Unset: always build max_stages stages.
    std::optional<double> min_improvement;
    /// Fraction of rows held out for calibration; 0 calibrates on the training rows.
    double cal_fraction = 0.0;
    /// Significance level of the stored confidence bands.
    double alpha = 0.5;
    double cost_ratio = 10.0;
    std::uint64_t seed = 0;
    /// Score candidates with calibrated instead of relative-frequency estimates.
    bool calibrate_in_scan = false;
    unsigned jobs = 1;
};

/// Preference data: instances plus ordered pairs (preferred, other) of row indices.
struct PairData {
    Dataset instances;
    std::vector<PreferencePair> pairs;
};

// ---------------------------------------------------------------------------
// Applying a list to a dataset

/// Dataset column of each list feature, matched by name.
inline std::vector<std::size_t> feature_columns(std::span<const FeatureSpec> features, const Dataset& data) {
    std::vector<std::size_t> cols;
    cols.reserve(features.size());
    for (const auto& f : features) cols.push_back(data.index_of(f.name));
    return cols;
}

/// totals[k][i]: total score of row i after k features, for k = 0..K.
inline std::vector<std::vector<int>> stage_totals(std::span<const FeatureSpec> features, const Dataset& data) {
    const auto cols = feature_columns(features, data);
    std::vector<std::vector<int>> totals(features.size() + 1, std::vector<int>(data.rows(), 0));
    for (std::size_t k = 1; k <= features.size(); ++k) {
        const FeatureSpec& f = features[k - 1];
        for (std::size_t i = 0; i < data.rows(); ++i)
            totals[k][i] = totals[k - 1][i] + f.score * binarize_value(f, data.at(i, cols[k - 1]));
    }
    return totals;
}

inline std::vector<std::vector<int>> stage_totals(const ScoringList& model, const Dataset& data) {
    return stage_totals(model.features(), data);
}

/// Expected entropy of the partition induced by `totals`, with relative
/// frequencies as the per-score estimates.
inline double frequency_entropy(std::span<const int> totals, std::span<const int> labels) {
    if (totals.empty()) throw InvalidArgument("entropy of an empty sample");
    const auto [lo, hi] = std::minmax_element(totals.begin(), totals.end());
    detail::ScoreHistogram h(*lo, *hi);
    for (std::size_t i = 0; i < totals.size(); ++i) h.add(totals[i], labels[i]);
    return h.entropy(static_cast<double>(totals.size()));
}

/// Stagewise training objective of a list under relative-frequency estimates.
inline std::vector<double> frequency_entropy_curve(const ScoringList& model, const Dataset& data) {
    std::vector<double> out;
    for (const auto& t : stage_totals(model, data)) out.push_back(frequency_entropy(t, data.labels()));
    return out;
}

/// Soft rank loss over all (positive, negative) pairs when instances are
/// ordered by total score, computed from per-score class counts.
inline double labelled_rank_loss(std::span<const int> totals, std::span<const int> labels) {
    const auto [lo_it, hi_it] = std::minmax_element(totals.begin(), totals.end());
    const int lo = *lo_it;
    std::vector<double> pos(*hi_it - lo + 1, 0.0);
    std::vector<double> neg(pos.size(), 0.0);
    for (std::size_t i = 0; i < totals.size(); ++i) (labels[i] ? pos : neg)[totals[i] - lo] += 1.0;
    double p_total = 0.0;
    double n_total = 0.0;
    for (std::size_t t = 0; t < pos.size(); ++t) {
        p_total += pos[t];
        n_total += neg[t];
    }
    if (p_total == 0.0 || n_total == 0.0) throw InvalidArgument("rank loss needs both classes");
    double loss = 0.0;
    double neg_above = n_total;  // negatives with a score strictly above t
    for (std::size_t t = 0; t < pos.size(); ++t) {
        neg_above -= neg[t];
        loss += pos[t] * (neg_above + 0.5 * neg[t]);
    }
    return loss / (p_total * n_total);
}

// ---------------------------------------------------------------------------
// Calibration of a fixed list

inline CalibrationFit fit_calibrator(Calibrator calibrator, const CalibrationData& data, const TauMap& tau) {
    if (calibrator == Calibrator::isotonic) return fit_isotonic(data);
    return fit_beta(data, tau);
}

/// Builds stage tables for a fixed list of features from labelled data:
/// counts per total score, calibrated estimates and covering bands.
inline ScoringList calibrate_list(const ScoreSet& score_set, std::vector<FeatureSpec> features, const Dataset& data,
                                  Calibrator calibrator, double alpha, double cost_ratio) {
    if (data.rows() == 0) throw DataError("calibration needs at least one row");
    if (data.labels().empty()) throw DataError("calibration needs labels");
    const auto totals = stage_totals(features, data);
    const auto& y = data.labels();
    const double base_rate = static_cast<double>(data.positives()) / static_cast<double>(data.rows());

    std::vector<StageTable> stages;
    std::vector<int> prefix;
    for (std::size_t k = 0; k <= features.size(); ++k) {
        if (k > 0) prefix.push_back(features[k - 1].score);
        StageTable st;
        st.stage = k;
        st.sigma = reachable_scores(prefix);
        st.support.assign(st.sigma.size(), Counts{});
        CalibrationData pairs;
        pairs.reserve(data.rows());
        for (std::size_t i = 0; i < data.rows(); ++i) {
            Counts& c = st.support[st.index_of(totals[k][i])];
            (y[i] ? c.positives : c.negatives) += 1;
            pairs.push_back({totals[k][i], y[i]});
        }
        if (k == 0) {
            st.q_hat.assign(1, base_rate);
        } else {
            const auto fit = fit_calibrator(calibrator, pairs, TauMap{st.sigma.front(), st.sigma.back()});
            for (int t : st.sigma) st.q_hat.push_back(std::clamp(predict_calibrated(fit, t), 0.0, 1.0));
            // guard against rounding in interpolation/pow
            for (std::size_t i = 1; i < st.q_hat.size(); ++i) st.q_hat[i] = std::max(st.q_hat[i], st.q_hat[i - 1]);
        }
        st.band = build_band(st.support, st.q_hat, alpha).covering;
        stages.push_back(std::move(st));
    }
    return ScoringList(score_set, std::move(features), std::move(stages), cost_ratio, alpha);
}

/// Stage tables without probabilities: reachable scores only.
inline ScoringList ranking_only_list(const ScoreSet& score_set, std::vector<FeatureSpec> features, double alpha,
                                     double cost_ratio) {
    std::vector<StageTable> stages;
    std::vector<int> prefix;
    for (std::size_t k = 0; k <= features.size(); ++k) {
        if (k > 0) prefix.push_back(features[k - 1].score);
        StageTable st;
        st.stage = k;
        st.sigma = reachable_scores(prefix);
        st.support.assign(st.sigma.size(), Counts{});
        stages.push_back(std::move(st));
    }
    return ScoringList(score_set, std::move(features), std::move(stages), cost_ratio, alpha);
}

// ---------------------------------------------------------------------------
// Preprocessing binarization

struct BinarizedData {
    Dataset data;                                     ///< every column binary
    std::vector<std::optional<ThresholdChoice>> choices;  ///< per column; empty for binary columns
};

/// Replaces each numeric column by its thresholded version, thresholds
/// chosen independently per column.
inline BinarizedData binarize_dataset(const Dataset& data, SearchStrategy strategy) {
    if (data.labels().empty()) throw DataError("binarization needs labels");
    BinarizedData out;
    std::vector<Column> cols = data.columns();
    std::vector<double> values = data.values();
    const std::size_t d = data.cols();
    for (std::size_t j = 0; j < d; ++j) {
        if (cols[j].kind == ColumnKind::binary) {
            out.choices.emplace_back();
            continue;
        }
        auto column = data.column_values(j);
        auto choice = preprocess_threshold(column, data.labels(), strategy, cols[j].name);
        for (std::size_t i = 0; i < data.rows(); ++i) values[i * d + j] = column[i] > choice.threshold ? 1.0 : 0.0;
        cols[j].kind = ColumnKind::binary;
        out.choices.emplace_back(std::move(choice));
    }
    out.data = Dataset(std::move(cols), std::move(values), data.labels(), data.imputed_mask());
    return out;
}

// ---------------------------------------------------------------------------
// Greedy search

namespace detail {

struct PreparedColumn {
    std::size_t column = 0;
    std::string name;
    std::vector<int> bits;            // binary or preprocessed columns
    std::optional<double> threshold;  // preprocessed numeric columns
    std::shared_ptr<const ThresholdCandidates> candidates;  // in-search numeric columns
    int association = 1;              // sign used for the first stage
};

struct ScanCandidate {
    std::size_t slot = 0;  // index into the prepared columns
    int score = 0;
    std::optional<double> threshold;
    std::vector<int> bits;
    double value = std::numeric_limits<double>::infinity();
};

/// Scores admissible at stage k, in tie-break order: smaller |s| first, then positive.
inline std::vector<int> stage_scores(const ScoreSet& set, std::size_t k, int association) {
    if (k == 1) {
        const int sign = set.positive_only() ? 1 : (association >= 0 ? 1 : -1);
        int best = 0;
        for (int s : set.values())
            if ((s > 0) == (sign > 0) && std::abs(s) > std::abs(best)) best = s;
        if (best == 0)
            for (int s : set.values())
                if (std::abs(s) > std::abs(best) || (std::abs(s) == std::abs(best) && s > best)) best = s;
        return {best};
    }
    std::vector<int> s = set.values();
    std::sort(s.begin(), s.end(), [](int a, int b) {
        if (std::abs(a) != std::abs(b)) return std::abs(a) < std::abs(b);
        return a > b;
    });
    return s;
}

struct ScanProblem {
    /// Objective of a vector of total scores over the training rows.
    std::function<double(std::span<const int>)> objective;
    /// Threshold search for an in-search numeric column; returns the chosen candidate index.
    std::function<std::size_t(std::span<const int>, const ThresholdCandidates&, int)> threshold_search;
};

inline std::vector<FeatureSpec> greedy_scan(std::vector<PreparedColumn> columns, std::size_t rows,
                                            const FitConfig& config, const ScanProblem& problem) {
    const std::size_t max_stages = config.max_stages.value_or(columns.size());
    if (max_stages > columns.size())
        throw InvalidArgument("max_stages (" + std::to_string(max_stages) + ") exceeds the number of features (" +
                              std::to_string(columns.size()) + ")");
    std::vector<int> totals(rows, 0);
    double current = problem.objective(totals);
    std::vector<bool> used(columns.size(), false);
    std::vector<FeatureSpec> chosen;

    for (std::size_t k = 1; k <= max_stages; ++k) {
        std::vector<ScanCandidate> per_column(columns.size());
        parallel_for(columns.size(), config.jobs, [&](std::size_t c) {
            if (used[c]) return;
            const PreparedColumn& col = columns[c];
            ScanCandidate best;
            best.slot = c;
            std::vector<int> next(rows);
            for (int s : stage_scores(config.score_set, k, col.association)) {
                std::optional<double> thr = col.threshold;
                std::vector<int> bits;
                const std::vector<int>* use = &col.bits;
                if (col.candidates) {
                    const std::size_t idx = problem.threshold_search(totals, *col.candidates, s);
                    thr = col.candidates->threshold(idx);
                    bits.resize(rows);
                    for (std::size_t i = 0; i < rows; ++i) bits[i] = col.candidates->group(i) > idx ? 1 : 0;
                    use = &bits;
                }
                for (std::size_t i = 0; i < rows; ++i) next[i] = totals[i] + s * (*use)[i];
                const double v = problem.objective(next);
                if (v < best.value) {
                    best.score = s;
                    best.threshold = thr;
                    best.bits = col.candidates ? std::move(bits) : col.bits;
                    best.value = v;
                }
            }
            per_column[c] = std::move(best);
        });

        const ScanCandidate* best = nullptr;
        for (std::size_t c = 0; c < columns.size(); ++c) {
            if (used[c]) continue;
            if (!best || per_column[c].value < best->value) best = &per_column[c];
        }
        if (!best) break;
        if (config.min_improvement && current - best->value <= *config.min_improvement) break;
        for (std::size_t i = 0; i < rows; ++i) totals[i] += best->score * best->bits[i];
        used[best->slot] = true;
        current = best->value;
        chosen.push_back({columns[best->slot].name, best->score, best->threshold});
    }
    return chosen;
}

inline int association_sign(double v) { return v >= 0.0 ? 1 : -1; }

inline std::vector<PreparedColumn> prepare_columns(const Dataset& data, BinarizationMode mode,
                                                   SearchStrategy strategy,
                                                   const std::function<int(std::size_t)>& association) {
    std::vector<PreparedColumn> out;
    for (std::size_t j = 0; j < data.cols(); ++j) {
        PreparedColumn col;
        col.column = j;
        col.name = data.column(j).name;
        col.association = association(j);
        auto values = data.column_values(j);
        if (data.column(j).kind == ColumnKind::binary) {
            col.bits.assign(values.begin(), values.end());
        } else if (mode == BinarizationMode::preprocess) {
            auto choice = preprocess_threshold(values, data.labels(), strategy, col.name);
            col.threshold = choice.threshold;
            col.bits.resize(values.size());
            for (std::size_t i = 0; i < values.size(); ++i) col.bits[i] = values[i] > choice.threshold ? 1 : 0;
        } else {
            col.candidates = std::make_shared<ThresholdCandidates>(values);
        }
        out.push_back(std::move(col));
    }
    return out;
}

inline double calibrated_entropy(std::span<const int> totals, std::span<const int> labels, Calibrator calibrator) {
    CalibrationData pairs;
    pairs.reserve(totals.size());
    for (std::size_t i = 0; i < totals.size(); ++i) pairs.push_back({totals[i], labels[i]});
    const auto bins = aggregate(pairs);
    CalibrationFit fit;
    if (bins.size() == 1) {
        fit = fit_isotonic(pairs);
    } else {
        fit = fit_calibrator(calibrator, pairs, TauMap{bins.front().score, bins.back().score});
    }
    std::vector<EntropyGroup> groups;
    for (const auto& b : bins) groups.push_back({b.weight, std::clamp(predict_calibrated(fit, b.score), 0.0, 1.0)});
    return expected_entropy(groups, static_cast<double>(totals.size()));
}

inline void check_config(const FitConfig& config) {
    if (!(config.cal_fraction >= 0.0 && config.cal_fraction < 1.0))
        throw InvalidArgument("cal_fraction must lie in [0, 1)");
    if (!(config.alpha > 0.0 && config.alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
    if (!(config.cost_ratio > 0.0)) throw InvalidArgument("cost ratio must be positive");
    if (config.min_improvement && *config.min_improvement < 0.0)
        throw InvalidArgument("min_improvement must be non-negative");
}

}  // namespace detail

/// Splits row indices into (training, calibration) parts; the calibration
/// part is empty when `fraction` is 0.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> calibration_split(std::size_t rows,
                                                                                       double fraction,
                                                                                       std::uint64_t seed) {
    std::vector<std::size_t> idx(rows);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (fraction <= 0.0) return {idx, {}};
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n_cal = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(rows)));
    if (n_cal == 0 || n_cal >= rows) throw DataError("calibration fraction leaves an empty training or calibration set");
    std::vector<std::size_t> cal(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_cal));
    std::vector<std::size_t> train(idx.begin() + static_cast<std::ptrdiff_t>(n_cal), idx.end());
    std::sort(cal.begin(), cal.end());
    std::sort(train.begin(), train.end());
    return {train, cal};
}

/// Greedy fit on labelled data.
inline ScoringList greedy_fit(const Dataset& data, const FitConfig& config) {
    detail::check_config(config);
    if (data.rows() < 2) throw DataError("fitting needs at least two rows");
    if (data.labels().empty()) throw DataError("fitting needs labels");
    const std::size_t pos = data.positives();
    if (pos == 0 || pos == data.rows()) throw DataError("single-class data: both labels must be present");

    auto [train_idx, cal_idx] = calibration_split(data.rows(), config.cal_fraction, config.seed);
    const Dataset train = cal_idx.empty() ? data : data.subset(train_idx);
    const Dataset cal = cal_idx.empty() ? data : data.subset(cal_idx);
    const auto& y = train.labels();
    if (train.positives() == 0 || train.positives() == train.rows())
        throw DataError("single-class training split");

    auto association = [&](std::size_t j) {
        double sum_pos = 0.0, sum_neg = 0.0, n_pos = 0.0, n_neg = 0.0;
        for (std::size_t i = 0; i < train.rows(); ++i) {
            (y[i] ? sum_pos : sum_neg) += train.at(i, j);
            (y[i] ? n_pos : n_neg) += 1.0;
        }
        return detail::association_sign(sum_pos / n_pos - sum_neg / n_neg);
    };
    auto columns = detail::prepare_columns(train, config.binarization, config.strategy, association);

    detail::ScanProblem problem;
    const std::span<const int> labels(y);
    if (config.objective == Objective::expected_entropy) {
        if (config.calibrate_in_scan) {
            problem.objective = [labels, c = config.calibrator](std::span<const int> t) {
                return detail::calibrated_entropy(t, labels, c);
            };
        } else {
            problem.objective = [labels](std::span<const int> t) { return frequency_entropy(t, labels); };
        }
        problem.threshold_search = [labels, strategy = config.strategy](std::span<const int> t,
                                                                        const ThresholdCandidates& c, int s) {
            return in_search_threshold(t, c, s, labels, strategy).candidate_index;
        };
    } else {
        problem.objective = [labels](std::span<const int> t) { return labelled_rank_loss(t, labels); };
        problem.threshold_search = [labels, strategy = config.strategy](std::span<const int> t,
                                                                        const ThresholdCandidates& c, int s) {
            std::vector<int> next(t.size());
            return search_argmin(strategy, c.size(), [&](std::size_t idx) {
                       for (std::size_t i = 0; i < t.size(); ++i) next[i] = t[i] + (c.group(i) > idx ? s : 0);
                       return labelled_rank_loss(next, labels);
                   }).index;
        };
    }

    auto features = detail::greedy_scan(std::move(columns), train.rows(), config, problem);
    return calibrate_list(config.score_set, std::move(features), cal, config.calibrator, config.alpha,
                          config.cost_ratio);
}

/// Greedy fit on preference pairs, minimizing the soft rank loss of the
/// total-score ordering. Numeric columns are thresholded in-search. When the
/// instances carry labels the stages are calibrated on them; otherwise the
/// result is a ranking-only list.
inline ScoringList greedy_fit_rank(const PairData& data, const FitConfig& config) {
    detail::check_config(config);
    if (data.pairs.empty()) throw DataError("ranking needs at least one preference pair");
    const Dataset& x = data.instances;
    for (const auto& [a, b] : data.pairs)
        if (a >= x.rows() || b >= x.rows()) throw DataError("preference pair references a missing row");
    const std::span<const PreferencePair> pairs(data.pairs);

    auto association = [&](std::size_t j) {
        double diff = 0.0;
        for (const auto& [a, b] : pairs) diff += x.at(a, j) - x.at(b, j);
        return detail::association_sign(diff);
    };
    auto columns = detail::prepare_columns(x, BinarizationMode::in_search, config.strategy, association);

    detail::ScanProblem problem;
    problem.objective = [pairs](std::span<const int> t) { return soft_rank_loss(t, pairs); };
    problem.threshold_search = [pairs, strategy = config.strategy](std::span<const int> t,
                                                                   const ThresholdCandidates& c, int s) {
        std::vector<int> next(t.size());
        return search_argmin(strategy, c.size(), [&](std::size_t idx) {
                   for (std::size_t i = 0; i < t.size(); ++i) next[i] = t[i] + (c.group(i) > idx ? s : 0);
                   return soft_rank_loss(std::span<const int>(next), pairs);
               }).index;
    };
    auto features = detail::greedy_scan(std::move(columns), x.rows(), config, problem);
    if (!x.labels().empty() && x.positives() > 0 && x.positives() < x.rows())
        return calibrate_list(config.score_set, std::move(features), x, config.calibrator, config.alpha,
                              config.cost_ratio);
    return ranking_only_list(config.score_set, std::move(features), config.alpha, config.cost_ratio);
}

// ---------------------------------------------------------------------------
// Exhaustive enumeration

struct EnumeratedList {
    std::vector<std::size_t> columns;
    std::vector<int> scores;
    std::vector<double> stage_values;  ///< objective at stages 0..K
};

inline constexpr double enumeration_limit = 1e6;

inline double enumeration_size(std::size_t features, std::size_t scores, std::size_t k_max) {
    double count = 1.0;
    for (std::size_t k = 0; k < k_max; ++k)
        count *= static_cast<double>(features - k) * static_cast<double>(scores);
    return count;
}

/// Every list of k_max distinct binary columns with every score assignment,
/// evaluated stagewise by training expected entropy under relative
/// frequencies. Lists are ordered by feature permutation, then by scores.
inline std::vector<EnumeratedList> exhaustive_enumerate(const Dataset& data, const ScoreSet& score_set,
                                                        std::size_t k_max, unsigned jobs = 1) {
    if (data.labels().empty()) throw DataError("enumeration needs labels");
    if (data.rows() == 0) throw DataError("enumeration needs rows");
    for (const auto& c : data.columns())
        if (c.kind != ColumnKind::binary) throw DataError("enumeration needs binary columns; binarize '" + c.name + "' first");
    const std::size_t d = data.cols();
    if (k_max > d) throw InvalidArgument("k_max exceeds the number of features");
    const double count = enumeration_size(d, score_set.values().size(), k_max);
    if (count > enumeration_limit)
        throw InvalidArgument("enumeration of " + std::to_string(static_cast<long long>(count)) +
                              " lists exceeds the limit of 1e6");

    const auto& y = data.labels();
    const std::size_t n = data.rows();
    std::vector<std::vector<int>> bits(d);
    for (std::size_t j = 0; j < d; ++j) {
        auto v = data.column_values(j);
        bits[j].assign(v.begin(), v.end());
    }
    const std::vector<int> zeros(n, 0);
    const double prior = frequency_entropy(zeros, y);
    if (k_max == 0) return {EnumeratedList{{}, {}, {prior}}};

    std::vector<std::vector<EnumeratedList>> shards(d);
    parallel_for(d, jobs, [&](std::size_t first) {
        std::vector<EnumeratedList>& out = shards[first];
        EnumeratedList cur;
        cur.stage_values.push_back(prior);
        std::vector<bool> used(d, false);
        std::function<void(const std::vector<int>&)> recurse = [&](const std::vector<int>& totals) {
            if (cur.columns.size() == k_max) {
                out.push_back(cur);
                return;
            }
            for (std::size_t j = 0; j < d; ++j) {
                if (used[j] || (cur.columns.empty() && j != first)) continue;
                used[j] = true;
                cur.columns.push_back(j);
                for (int s : score_set.values()) {
                    std::vector<int> next(n);
                    for (std::size_t i = 0; i < n; ++i) next[i] = totals[i] + s * bits[j][i];
                    cur.scores.push_back(s);
                    cur.stage_values.push_back(frequency_entropy(next, y));
                    recurse(next);
                    cur.scores.pop_back();
                    cur.stage_values.pop_back();
                }
                cur.columns.pop_back();
                used[j] = false;
            }
        };
        recurse(zeros);
    });
    std::vector<EnumeratedList> all;
    all.reserve(static_cast<std::size_t>(count));
    for (auto& s : shards) std::move(s.begin(), s.end(), std::back_inserter(all));
    return all;
}

/// Stagewise minimum over enumerated lists.
inline std::vector<double> lower_envelope(std::span<const EnumeratedList> lists) {
    std::vector<double> env;
    for (const auto& l : lists) {
        if (env.size() < l.stage_values.size()) env.resize(l.stage_values.size(), std::numeric_limits<double>::infinity());
        for (std::size_t k = 0; k < l.stage_values.size(); ++k) env[k] = std::min(env[k], l.stage_values[k]);
    }
    return env;
}

}  // namespace psl
