#pragma once

// Command-line front end: fit, predict, evaluate, binarize, enumerate, rank, serve.
// Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "psl/binarize.hpp"
#include "psl/core.hpp"
#include "psl/error.hpp"
#include "psl/eval.hpp"
#include "psl/io.hpp"
#include "psl/learn.hpp"
#include "psl/serve.hpp"

namespace psl::cli {

using json = nlohmann::json;

enum ExitCode : int { ok = 0, usage = 1, data_error = 2, internal = 3 };

/// Raised for option combinations CLI11 cannot express.
struct UsageError : Error {
    using Error::Error;
};

namespace detail {

struct DataArgs {
    std::string path;
    std::string label = "label";
    bool unlabelled = false;
    std::vector<std::string> binary;
    std::vector<std::string> numeric;

    io::CsvOptions csv() const {
        io::CsvOptions o;
        if (!unlabelled) o.label_column = label;
        o.force_binary.insert(binary.begin(), binary.end());
        o.force_numeric.insert(numeric.begin(), numeric.end());
        return o;
    }
};

struct FitArgs {
    std::string scores = "\xC2\xB1" "1,\xC2\xB1" "2,\xC2\xB1" "3";
    bool positive_only = false;
    std::string calibrator = "isotonic";
    std::string binarization = "in-search";
    std::string strategy = "bisect";
    std::string objective = "entropy";
    std::optional<std::size_t> max_stages;
    std::optional<double> min_improvement;
    double cal_fraction = 0.0;
    double alpha = 0.5;
    double cost = 10.0;
    bool calibrate_in_scan = false;
};

inline SearchStrategy parse_strategy(const std::string& s) {
    return s == "brute" ? SearchStrategy::brute : SearchStrategy::bisect;
}

inline FitConfig make_config(const FitArgs& a, std::uint64_t seed, unsigned jobs) {
    FitConfig c;
    try {
        c.score_set = ScoreSet::parse(a.scores, a.positive_only);
    } catch (const InvalidArgument& e) {
        throw UsageError(std::string("--scores: ") + e.what());
    }
    c.calibrator = a.calibrator == "beta" ? Calibrator::beta : Calibrator::isotonic;
    c.binarization = a.binarization == "preprocess" ? BinarizationMode::preprocess : BinarizationMode::in_search;
    c.strategy = parse_strategy(a.strategy);
    c.objective = a.objective == "srl" ? Objective::soft_rank_loss : Objective::expected_entropy;
    c.max_stages = a.max_stages;
    c.min_improvement = a.min_improvement;
    c.cal_fraction = a.cal_fraction;
    c.alpha = a.alpha;
    c.cost_ratio = a.cost;
    c.seed = seed;
    c.calibrate_in_scan = a.calibrate_in_scan;
    c.jobs = jobs;
    return c;
}

inline void add_data_options(CLI::App* app, DataArgs& d, bool label_optional = false) {
    app->add_option("--data", d.path, "Input CSV with a header row")->required()->check(CLI::ExistingFile);
    app->add_option("--label", d.label, "Name of the 0/1 label column")->capture_default_str();
    if (label_optional) app->add_flag("--unlabelled", d.unlabelled, "The CSV has no label column");
    app->add_option("--binary", d.binary, "Force a column to be treated as binary (repeatable)");
    app->add_option("--numeric", d.numeric, "Force a column to be treated as numeric (repeatable)");
}

inline void add_fit_options(CLI::App* app, FitArgs& f) {
    app->add_option("--scores", f.scores, "Score set, e.g. \xC2\xB1" "1,\xC2\xB1" "2,\xC2\xB1" "3 or 1,2,3")
        ->capture_default_str();
    app->add_flag("--positive-only", f.positive_only, "Use only positive scores; stage 1 takes the largest");
    app->add_option("--calibrator", f.calibrator, "Stage calibrator")
        ->check(CLI::IsMember({"isotonic", "beta"}))
        ->capture_default_str();
    app->add_option("--binarization", f.binarization, "Threshold numeric features before or during the search")
        ->check(CLI::IsMember({"preprocess", "in-search"}))
        ->capture_default_str();
    app->add_option("--strategy", f.strategy, "Threshold search strategy")
        ->check(CLI::IsMember({"brute", "bisect"}))
        ->capture_default_str();
    app->add_option("--objective", f.objective, "Greedy objective: expected entropy or soft rank loss")
        ->check(CLI::IsMember({"entropy", "srl"}))
        ->capture_default_str();
    app->add_option("--max-stages", f.max_stages, "Number of features to select (default: all)")
        ->check(CLI::NonNegativeNumber);
    app->add_option("--min-improvement", f.min_improvement,
                    "Stop when the best candidate improves the objective by at most this amount");
    app->add_option("--cal-fraction", f.cal_fraction, "Fraction of rows held out for calibration")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    app->add_option("--alpha", f.alpha, "Significance level of the stored confidence bands")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    app->add_option("--cost", f.cost, "Default cost ratio M stored with the model")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_flag("--calibrate-in-scan", f.calibrate_in_scan,
                  "Score candidates with calibrated rather than relative-frequency estimates");
}

/// Writes `text` to `path`, or to `out` when the path is empty or "-".
inline void emit(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write '" + path + "'");
    f << text;
}

inline std::vector<double> model_inputs(const ScoringList& model, const Dataset& data, std::size_t row,
                                        std::size_t k) {
    std::vector<double> x(model.size(), std::nan(""));
    for (std::size_t i = 0; i < k; ++i) x[i] = data.at(row, data.index_of(model.features()[i].name));
    return x;
}

}  // namespace detail

/// Parses argv and runs one subcommand.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    using namespace detail;
    CLI::App app{"Probabilistic scoring lists: fit, evaluate and serve staged scoring classifiers", "psl"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every subcommand");

    std::uint64_t seed = 0;
    unsigned jobs = 1;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--seed", seed, "Seed for every random choice (env SCORELIST_SEED)")
            ->envname("SCORELIST_SEED")
            ->capture_default_str();
        sub->add_option("--jobs", jobs, "Worker threads for candidate scans and MCCV splits")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
    };
    std::function<void()> action;

    // fit
    DataArgs fit_data;
    FitArgs fit_args;
    std::string fit_out;
    auto* fit = app.add_subcommand("fit", "Fit a scoring list and write the model JSON");
    add_data_options(fit, fit_data);
    add_fit_options(fit, fit_args);
    fit->add_option("--out,-o", fit_out, "Model output path (default: stdout)");
    add_common(fit);
    fit->callback([&] {
        action = [&] {
            const FitConfig config = make_config(fit_args, seed, jobs);
            const Dataset data = io::load_csv(fit_data.path, fit_data.csv());
            io::ModelDocument doc{greedy_fit(data, config), io::config_to_json(config), io::fingerprint(data)};
            emit(fit_out, io::save_model(doc), out);
        };
    });

    // predict
    std::string predict_model;
    DataArgs predict_data;
    std::optional<std::size_t> predict_stage;
    std::optional<double> predict_cost;
    std::string predict_out;
    auto* predict = app.add_subcommand("predict", "Per-row probability, interval and decision at one stage");
    predict->add_option("--model", predict_model, "Model JSON")->required()->check(CLI::ExistingFile);
    add_data_options(predict, predict_data, true);
    predict->add_option("--stage", predict_stage, "Stage k (default: the last stage)");
    predict->add_option("--cost", predict_cost, "Cost ratio M (default: the model's)")->check(CLI::PositiveNumber);
    predict->add_option("--out,-o", predict_out, "CSV output path (default: stdout)");
    add_common(predict);
    predict->callback([&] {
        action = [&] {
            const ScoringList model = io::load_model(predict_model).model;
            if (model.ranking_only()) throw DataError("model carries no probabilities; use 'rank'");
            const std::size_t k = predict_stage.value_or(model.size());
            if (k > model.size()) throw UsageError("--stage exceeds the model length " + std::to_string(model.size()));
            const double m = predict_cost.value_or(model.cost_ratio());
            io::CsvOptions csv = predict_data.csv();
            const Dataset data = io::load_csv(predict_data.path, csv);
            std::ostringstream s;
            s << "row,stage,total,q_hat,lower,upper,decision,risk_averse_decision,expected_loss\n";
            for (std::size_t i = 0; i < data.rows(); ++i) {
                const auto x = model_inputs(model, data, i, k);
                const int t = total_score(model, x, k);
                const double q = stage_probability(model, k, t);
                const Interval b = stage_interval(model, k, t);
                s << i << ',' << k << ',' << t << ',' << io::format_double(q) << ',' << io::format_double(b.lower)
                  << ',' << io::format_double(b.upper) << ',' << decide(q, m) << ',' << decide(b.upper, m) << ','
                  << io::format_double(expected_decision_loss(q, m)) << '\n';
            }
            emit(predict_out, s.str(), out);
        };
    });

    // evaluate
    DataArgs eval_data;
    FitArgs eval_fit;
    std::string eval_model;
    std::optional<std::size_t> eval_mccv;
    double train_fraction = 2.0 / 3.0;
    bool stratified = false;
    std::vector<std::string> metrics;
    double eval_cost = 10.0;
    double band_alpha = 0.5;
    std::string loss_mode = "point";
    std::string format = "json";
    std::string eval_out;
    auto* evaluate = app.add_subcommand("evaluate", "Stagewise metrics of a model, or of a fit protocol under MCCV");
    add_data_options(evaluate, eval_data);
    add_fit_options(evaluate, eval_fit);
    evaluate->add_option("--model", eval_model, "Evaluate this fitted model instead of refitting")
        ->check(CLI::ExistingFile);
    evaluate->add_option("--mccv", eval_mccv, "Number of Monte Carlo cross-validation splits (default 100)")
        ->check(CLI::PositiveNumber);
    evaluate->add_option("--train-fraction", train_fraction, "Training share of each split")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    evaluate->add_flag("--stratified", stratified, "Preserve the class ratio in each split");
    evaluate->add_option("--metric", metrics, "Metric(s): entropy, brier, auc, srl, loss (default: entropy,brier,auc,loss)")
        ->check(CLI::IsMember({"entropy", "brier", "auc", "srl", "loss"}))
        ->delimiter(',');
    evaluate->add_option("--eval-cost", eval_cost, "Cost ratio M for the loss metric")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    evaluate->add_option("--band-alpha", band_alpha, "Significance level of the decision bands")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    evaluate->add_option("--loss-mode", loss_mode, "Pricing of decisions in the loss metric")
        ->check(CLI::IsMember({"point", "worst-case", "empirical"}))
        ->capture_default_str();
    evaluate->add_option("--format", format, "Report format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
    evaluate->add_option("--out,-o", eval_out, "Report output path (default: stdout)");
    add_common(evaluate);
    evaluate->callback([&] {
        action = [&] {
            if (!eval_model.empty() && eval_mccv) throw UsageError("--mccv refits models and cannot be combined with --model");
            EvaluationOptions eo;
            if (!metrics.empty()) {
                eo.metrics.clear();
                for (const auto& m : metrics) eo.metrics.push_back(parse_metric(m));
            }
            eo.cost_ratio = eval_cost;
            eo.band_alpha = band_alpha;
            eo.loss_mode = loss_mode == "worst-case"  ? LossMode::worst_case
                           : loss_mode == "empirical" ? LossMode::empirical
                                                      : LossMode::point;
            const FitConfig config = make_config(eval_fit, seed, jobs);
            const Dataset data = io::load_csv(eval_data.path, eval_data.csv());
            StagewiseReport report;
            if (!eval_model.empty()) {
                report = evaluate_model(io::load_model(eval_model).model, data, eo);
                report.seed = seed;
            } else {
                MccvOptions mo;
                mo.n_splits = eval_mccv.value_or(100);
                mo.train_fraction = train_fraction;
                mo.seed = seed;
                mo.stratified = stratified;
                mo.jobs = jobs;
                mo.evaluation = eo;
                report = mccv(data, config, mo);
            }
            if (format == "csv") {
                emit(eval_out, io::report_to_csv(report), out);
            } else {
                json j = io::report_to_json(report);
                j["metadata"]["fit_config"] = eval_model.empty() ? io::config_to_json(config) : json(nullptr);
                j["metadata"]["model"] = eval_model.empty() ? json(nullptr) : json(eval_model);
                emit(eval_out, io::to_canonical(j), out);
            }
        };
    });

    // binarize
    DataArgs bin_data;
    std::string bin_strategy = "bisect";
    std::string bin_out;
    auto* binarize = app.add_subcommand("binarize", "Entropy-optimal thresholds for every numeric column");
    add_data_options(binarize, bin_data);
    binarize->add_option("--strategy", bin_strategy, "Threshold search strategy")
        ->check(CLI::IsMember({"brute", "bisect"}))
        ->capture_default_str();
    binarize->add_option("--out,-o", bin_out, "Report output path (default: stdout)");
    add_common(binarize);
    binarize->callback([&] {
        action = [&] {
            const Dataset data = io::load_csv(bin_data.path, bin_data.csv());
            const BinarizedData b = binarize_dataset(data, parse_strategy(bin_strategy));
            emit(bin_out, io::to_canonical(io::threshold_report(b.choices)), out);
        };
    });

    // enumerate
    DataArgs enum_data;
    std::string enum_scores = "1,2,3";
    bool enum_positive_only = false;
    std::optional<std::size_t> enum_k;
    bool enum_all = false;
    std::string enum_out;
    auto* enumerate = app.add_subcommand("enumerate", "Exhaustive search over short lists and its stagewise envelope");
    add_data_options(enumerate, enum_data);
    enumerate->add_option("--scores", enum_scores, "Score set")->capture_default_str();
    enumerate->add_flag("--positive-only", enum_positive_only, "Mark the score set as positive-only");
    enumerate->add_option("--max-stages", enum_k, "List length (default: all features)");
    enumerate->add_flag("--all", enum_all, "Include every enumerated list in the output");
    enumerate->add_option("--out,-o", enum_out, "Output path (default: stdout)");
    add_common(enumerate);
    enumerate->callback([&] {
        action = [&] {
            ScoreSet set;
            try {
                set = ScoreSet::parse(enum_scores, enum_positive_only);
            } catch (const InvalidArgument& e) {
                throw UsageError(std::string("--scores: ") + e.what());
            }
            const Dataset data = io::load_csv(enum_data.path, enum_data.csv());
            const std::size_t k = enum_k.value_or(data.cols());
            if (k > data.cols()) throw UsageError("--max-stages exceeds the number of features");
            const auto lists = exhaustive_enumerate(data, set, k, jobs);
            const auto env = lower_envelope(lists);
            auto list_json = [&](const EnumeratedList& l) {
                json names = json::array();
                for (auto c : l.columns) names.push_back(data.columns()[c].name);
                return json{{"features", names}, {"scores", l.scores}, {"entropy", l.stage_values}};
            };
            json best = json::array();
            for (std::size_t s = 0; s < env.size(); ++s) {
                for (const auto& l : lists) {
                    if (l.stage_values[s] == env[s]) {
                        json b = list_json(l);
                        b["stage"] = s;
                        best.push_back(std::move(b));
                        break;
                    }
                }
            }
            json j{{"n_lists", lists.size()},
                   {"score_set", set.values()},
                   {"max_stages", k},
                   {"envelope", env},
                   {"argmin", best}};
            if (enum_all) {
                json all = json::array();
                for (const auto& l : lists) all.push_back(list_json(l));
                j["lists"] = std::move(all);
            }
            emit(enum_out, io::to_canonical(j), out);
        };
    });

    // rank
    DataArgs rank_data;
    FitArgs rank_fit;
    std::string rank_pairs;
    std::string rank_out;
    std::string rank_order;
    auto* rank = app.add_subcommand("rank", "Fit a list on preference pairs and order the instances");
    add_data_options(rank, rank_data, true);
    add_fit_options(rank, rank_fit);
    rank->add_option("--pairs", rank_pairs, "Pair CSV with columns preferred_row,other_row")
        ->required()
        ->check(CLI::ExistingFile);
    rank->add_option("--out,-o", rank_out, "Model output path (default: stdout)");
    rank->add_option("--order", rank_order, "Also write the instances ordered by final total score");
    add_common(rank);
    rank->callback([&] {
        action = [&] {
            const FitConfig config = make_config(rank_fit, seed, jobs);
            Dataset data = io::load_csv(rank_data.path, rank_data.csv());
            const auto fp = io::fingerprint(data);
            const PairData pairs = io::load_pairs(rank_pairs, std::move(data));
            io::ModelDocument doc{greedy_fit_rank(pairs, config), io::config_to_json(config), fp};
            emit(rank_out, io::save_model(doc), out);
            if (!rank_order.empty()) {
                const auto totals = stage_totals(doc.model, pairs.instances);
                const auto& last = totals.back();
                std::vector<std::size_t> order(last.size());
                std::iota(order.begin(), order.end(), std::size_t{0});
                std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return last[a] > last[b]; });
                std::ostringstream s;
                s << "rank,row,total\n";
                for (std::size_t r = 0; r < order.size(); ++r) s << r << ',' << order[r] << ',' << last[order[r]] << '\n';
                emit(rank_order, s.str(), out);
            }
        };
    });

    // serve
    std::string serve_model;
    std::string host = "127.0.0.1";
    int port = 8080;
    long ttl = 3600;
    auto* serve_cmd = app.add_subcommand("serve", "Host a model for interactive decision sessions over HTTP");
    serve_cmd->add_option("--model", serve_model, "Model JSON")->required()->check(CLI::ExistingFile);
    serve_cmd->add_option("--host", host, "Bind address")->capture_default_str();
    serve_cmd->add_option("--port", port, "Port (0 picks a free one)")->check(CLI::Range(0, 65535))->capture_default_str();
    serve_cmd->add_option("--ttl", ttl, "Session idle lifetime in seconds")->check(CLI::PositiveNumber)->capture_default_str();
    add_common(serve_cmd);
    serve_cmd->callback([&] {
        action = [&] {
            serve::ServiceOptions so;
            so.ttl = std::chrono::seconds(ttl);
            serve::SessionService service(io::load_model(serve_model).model, so);
            httplib::Server server;
            serve::bind_routes(server, service);
            int bound = port;
            if (port == 0) {
                bound = server.bind_to_any_port(host);
            } else if (!server.bind_to_port(host, port)) {
                bound = -1;
            }
            if (bound < 0) throw DataError("cannot bind " + host + ":" + std::to_string(port));
            err << "listening on http://" << host << ':' << bound << std::endl;
            server.listen_after_bind();
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? ExitCode::ok : ExitCode::usage;
    }
    try {
        if (action) action();
        return ExitCode::ok;
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return ExitCode::usage;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return ExitCode::data_error;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return ExitCode::internal;
    }
}

inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    std::vector<const char*> argv{"psl"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace psl::cli
