#pragma once

// Stagewise evaluation of scoring lists and the Monte Carlo cross-validation
// harness: repeated random train/test splits, per-split fits, and per-stage
// mean with a normal-approximation 95% interval of the mean.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "psl/core.hpp"
#include "psl/dataset.hpp"
#include "psl/entropy.hpp"
#include "psl/error.hpp"
#include "psl/learn.hpp"
#include "psl/parallel.hpp"
#include "psl/ranking.hpp"
#include "psl/uncertainty.hpp"

namespace psl {

enum class Metric { entropy, brier, auc, srl, loss };

inline const char* to_string(Metric m) {
    switch (m) {
        case Metric::entropy: return "entropy";
        case Metric::brier: return "brier";
        case Metric::auc: return "auc";
        case Metric::srl: return "srl";
        case Metric::loss: return "loss";
    }
    return "?";
}

inline Metric parse_metric(std::string_view name) {
    for (Metric m : {Metric::entropy, Metric::brier, Metric::auc, Metric::srl, Metric::loss})
        if (name == to_string(m)) return m;
    throw InvalidArgument("unknown metric '" + std::string(name) + "'");
}

/// How the expected-loss curve prices a decision.
enum class LossMode {
    point,       ///< decision from the band's upper bound, loss from the point estimate
    worst_case,  ///< decision from the upper bound, loss from the band endpoint least favourable to it
    empirical,   ///< realised loss against the test labels (1 per false positive, M per false negative)
};

inline const char* to_string(LossMode m) {
    switch (m) {
        case LossMode::point: return "point";
        case LossMode::worst_case: return "worst_case";
        case LossMode::empirical: return "empirical";
    }
    return "?";
}

namespace detail {

inline void require_labels(const Dataset& data) {
    if (data.rows() == 0) throw DataError("evaluation needs at least one row");
    if (data.labels().empty()) throw DataError("evaluation needs labels");
}

inline std::vector<double> stage_predictions(const ScoringList& model, std::span<const int> totals, std::size_t k) {
    std::vector<double> p;
    p.reserve(totals.size());
    for (int t : totals) p.push_back(stage_probability(model, k, t));
    return p;
}

}  // namespace detail

/// Mean squared difference between stage-k probabilities and labels.
inline double brier(const ScoringList& model, const Dataset& data, std::size_t k) {
    detail::require_labels(data);
    const auto totals = stage_totals(model, data);
    const auto p = detail::stage_predictions(model, totals.at(k), k);
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = p[i] - data.label(i);
        sum += d * d;
    }
    return sum / static_cast<double>(p.size());
}

/// Expected entropy of the model's stage-k estimates, weighted by how the
/// rows fall into total scores.
inline double test_entropy(const ScoringList& model, const Dataset& data, std::size_t k) {
    if (data.rows() == 0) throw DataError("evaluation needs at least one row");
    const auto totals = stage_totals(model, data);
    const StageTable& st = model.stage(k);
    std::vector<EntropyGroup> groups(st.sigma.size());
    for (int t : totals.at(k)) groups[st.index_of(t)].count += 1.0;
    for (std::size_t i = 0; i < groups.size(); ++i) groups[i].q = st.q_hat.at(i);
    return expected_entropy(groups, static_cast<double>(data.rows()));
}

/// Ranking score of each row at stage k: the probability estimate, or the
/// total score for ranking-only lists.
inline std::vector<double> ranking_scores(const ScoringList& model, const Dataset& data, std::size_t k) {
    const auto totals = stage_totals(model, data);
    if (model.ranking_only()) return {totals.at(k).begin(), totals.at(k).end()};
    return detail::stage_predictions(model, totals.at(k), k);
}

inline double auc(const ScoringList& model, const Dataset& data, std::size_t k) {
    detail::require_labels(data);
    const auto s = ranking_scores(model, data, k);
    return auc(std::span<const double>(s), std::span<const int>(data.labels()));
}

/// Mean soft rank loss of the stage-k ordering over preference pairs.
inline double soft_rank_loss(const ScoringList& model, const Dataset& instances,
                             std::span<const PreferencePair> pairs, std::size_t k) {
    const auto s = ranking_scores(model, instances, k);
    return soft_rank_loss(std::span<const double>(s), pairs);
}

/// Per-stage mean expected loss under cost ratio M, with decisions taken on
/// the upper bound of the band re-derived at significance `alpha`.
inline std::vector<double> expected_loss_curve(const ScoringList& model, const Dataset& data, double cost_ratio,
                                               double alpha, LossMode mode = LossMode::point) {
    if (data.rows() == 0) throw DataError("evaluation needs at least one row");
    if (mode == LossMode::empirical) detail::require_labels(data);
    if (!(cost_ratio > 0.0)) throw InvalidArgument("cost ratio must be positive");
    const auto totals = stage_totals(model, data);
    std::vector<double> curve;
    for (std::size_t k = 0; k <= model.size(); ++k) {
        const StageTable& st = model.stage(k);
        const auto band = stage_band(st, alpha);
        double sum = 0.0;
        for (std::size_t i = 0; i < data.rows(); ++i) {
            const std::size_t idx = st.index_of(totals[k][i]);
            const int decision = decide(band[idx].upper, cost_ratio);
            switch (mode) {
                case LossMode::point: sum += decision_loss(decision, st.q_hat[idx], cost_ratio); break;
                case LossMode::worst_case:
                    sum += decision == 1 ? 1.0 - band[idx].lower : cost_ratio * band[idx].upper;
                    break;
                case LossMode::empirical: {
                    const int y = data.label(i);
                    sum += decision == 1 ? (y == 0 ? 1.0 : 0.0) : (y == 1 ? cost_ratio : 0.0);
                    break;
                }
            }
        }
        curve.push_back(sum / static_cast<double>(data.rows()));
    }
    return curve;
}

struct EvaluationOptions {
    std::vector<Metric> metrics{Metric::entropy, Metric::brier, Metric::auc, Metric::loss};
    double cost_ratio = 10.0;
    double band_alpha = 0.5;
    LossMode loss_mode = LossMode::point;
};

/// Stagewise values of every requested metric for one model on one dataset.
inline std::map<Metric, std::vector<double>> evaluate_stagewise(const ScoringList& model, const Dataset& data,
                                                                const EvaluationOptions& options) {
    std::map<Metric, std::vector<double>> out;
    for (Metric m : options.metrics) {
        std::vector<double> v;
        if (m == Metric::loss) {
            v = expected_loss_curve(model, data, options.cost_ratio, options.band_alpha, options.loss_mode);
        } else {
            for (std::size_t k = 0; k <= model.size(); ++k) {
                switch (m) {
                    case Metric::entropy: v.push_back(test_entropy(model, data, k)); break;
                    case Metric::brier: v.push_back(brier(model, data, k)); break;
                    case Metric::auc: v.push_back(auc(model, data, k)); break;
                    case Metric::srl: v.push_back(1.0 - auc(model, data, k)); break;
                    default: break;
                }
            }
        }
        out[m] = std::move(v);
    }
    return out;
}

struct StageSummary {
    std::size_t stage = 0;
    double mean = 0.0;
    double half_width = 0.0;  ///< of the 95% interval of the mean
    std::size_t n = 0;
};

struct StagewiseReport {
    std::size_t n_splits = 1;
    double train_fraction = 1.0;
    std::uint64_t seed = 0;
    bool stratified = false;
    double cost_ratio = 10.0;
    double band_alpha = 0.5;
    LossMode loss_mode = LossMode::point;
    std::string ci_method = "normal";
    std::map<Metric, std::vector<StageSummary>> metrics;
};

inline constexpr double z_95 = 1.959963984540054;

/// Mean and normal-approximation 95% half-width; half-width 0 for one value.
inline StageSummary summarize(std::span<const double> values, std::size_t stage) {
    StageSummary s;
    s.stage = stage;
    s.n = values.size();
    if (values.empty()) throw InvalidArgument("cannot summarize zero values");
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        const double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
        s.half_width = z_95 * sd / std::sqrt(static_cast<double>(values.size()));
    }
    return s;
}

/// Aggregates per-split stagewise curves. Splits whose model is shorter carry
/// their last stage forward.
inline std::map<Metric, std::vector<StageSummary>> aggregate_curves(
    const std::vector<std::map<Metric, std::vector<double>>>& per_split) {
    std::map<Metric, std::vector<StageSummary>> out;
    if (per_split.empty()) return out;
    for (const auto& [metric, _] : per_split.front()) {
        std::size_t stages = 0;
        for (const auto& s : per_split) stages = std::max(stages, s.at(metric).size());
        std::vector<StageSummary> summaries;
        for (std::size_t k = 0; k < stages; ++k) {
            std::vector<double> vals;
            for (const auto& s : per_split) {
                const auto& curve = s.at(metric);
                vals.push_back(curve[std::min(k, curve.size() - 1)]);
            }
            summaries.push_back(summarize(vals, k));
        }
        out[metric] = std::move(summaries);
    }
    return out;
}

struct MccvOptions {
    std::size_t n_splits = 100;
    double train_fraction = 2.0 / 3.0;
    std::uint64_t seed = 0;
    bool stratified = false;
    unsigned jobs = 1;
    EvaluationOptions evaluation;
};

/// Training-row indices of each split, drawn up front so results do not
/// depend on how splits are scheduled.
inline std::vector<std::vector<std::size_t>> mccv_splits(const Dataset& data, const MccvOptions& options) {
    const std::size_t n = data.rows();
    std::mt19937_64 rng(options.seed);
    std::vector<std::vector<std::size_t>> splits;
    for (std::size_t s = 0; s < options.n_splits; ++s) {
        std::vector<std::size_t> train;
        if (options.stratified) {
            std::vector<std::size_t> pos, neg;
            for (std::size_t i = 0; i < n; ++i) (data.label(i) ? pos : neg).push_back(i);
            for (auto* group : {&pos, &neg}) {
                std::shuffle(group->begin(), group->end(), rng);
                const auto take = static_cast<std::size_t>(
                    std::llround(options.train_fraction * static_cast<double>(group->size())));
                train.insert(train.end(), group->begin(), group->begin() + static_cast<std::ptrdiff_t>(take));
            }
        } else {
            std::vector<std::size_t> idx(n);
            std::iota(idx.begin(), idx.end(), std::size_t{0});
            std::shuffle(idx.begin(), idx.end(), rng);
            const auto take =
                static_cast<std::size_t>(std::llround(options.train_fraction * static_cast<double>(n)));
            train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take));
        }
        std::sort(train.begin(), train.end());
        splits.push_back(std::move(train));
    }
    return splits;
}

/// Monte Carlo cross-validation: fit on each random training part, evaluate
/// stagewise on the rest.
inline StagewiseReport mccv(const Dataset& data, const FitConfig& config, const MccvOptions& options) {
    detail::require_labels(data);
    if (options.n_splits == 0) throw InvalidArgument("MCCV needs at least one split");
    if (!(options.train_fraction > 0.0 && options.train_fraction < 1.0))
        throw InvalidArgument("train fraction must lie in (0, 1)");
    const auto splits = mccv_splits(data, options);
    std::vector<std::map<Metric, std::vector<double>>> per_split(splits.size());
    parallel_for(splits.size(), options.jobs, [&](std::size_t s) {
        const auto& train_idx = splits[s];
        std::vector<std::size_t> test_idx;
        std::size_t t = 0;
        for (std::size_t i = 0; i < data.rows(); ++i) {
            if (t < train_idx.size() && train_idx[t] == i)
                ++t;
            else
                test_idx.push_back(i);
        }
        if (test_idx.empty()) throw DataError("MCCV split leaves no test rows");
        FitConfig cfg = config;
        cfg.seed = config.seed + s;
        cfg.jobs = 1;
        const Dataset train = data.subset(train_idx);
        const Dataset test = data.subset(test_idx);
        if (cfg.max_stages) cfg.max_stages = std::min(*cfg.max_stages, train.cols());
        const ScoringList model = greedy_fit(train, cfg);
        per_split[s] = evaluate_stagewise(model, test, options.evaluation);
    });

    StagewiseReport report;
    report.n_splits = options.n_splits;
    report.train_fraction = options.train_fraction;
    report.seed = options.seed;
    report.stratified = options.stratified;
    report.cost_ratio = options.evaluation.cost_ratio;
    report.band_alpha = options.evaluation.band_alpha;
    report.loss_mode = options.evaluation.loss_mode;
    report.metrics = aggregate_curves(per_split);
    return report;
}

/// Report for a single model on a single dataset (one "split").
inline StagewiseReport evaluate_model(const ScoringList& model, const Dataset& data,
                                      const EvaluationOptions& options) {
    StagewiseReport report;
    report.n_splits = 1;
    report.train_fraction = 0.0;
    report.cost_ratio = options.cost_ratio;
    report.band_alpha = options.band_alpha;
    report.loss_mode = options.loss_mode;
    report.metrics = aggregate_curves({evaluate_stagewise(model, data, options)});
    return report;
}

}  // namespace psl
