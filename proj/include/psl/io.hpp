#pragma once

// Dataset ingestion (CSV with mode imputation), preference-pair files,
// canonical JSON model documents, and report serialization.

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "psl/binarize.hpp"
#include "psl/core.hpp"
#include "psl/dataset.hpp"
#include "psl/error.hpp"
#include "psl/eval.hpp"
#include "psl/learn.hpp"

namespace psl::io {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// CSV

/// Splits one CSV record; double quotes group fields and "" escapes a quote.
inline std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur.push_back('"');
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline bool is_missing(std::string_view token) {
    token = trim(token);
    return token.empty() || token == "NA" || token == "?";
}

inline std::optional<double> parse_number(std::string_view token) {
    token = trim(token);
    if (!token.empty() && token.front() == '+') token.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size()) return std::nullopt;
    return v;
}

struct CsvOptions {
    /// Column holding the 0/1 label; when unset, the data is unlabelled.
    std::optional<std::string> label_column;
    std::set<std::string> force_binary;
    std::set<std::string> force_numeric;
};

/// Most frequent value; ties resolve to the smaller value.
inline double column_mode(const std::vector<double>& present) {
    std::map<double, std::size_t> counts;
    for (double v : present) ++counts[v];
    double best = 0.0;
    std::size_t best_count = 0;
    for (const auto& [v, c] : counts) {
        if (c > best_count) {
            best = v;
            best_count = c;
        }
    }
    return best;
}

inline Dataset read_csv(std::istream& in, const CsvOptions& options) {
    std::string line;
    if (!std::getline(in, line) || trim(line).empty()) throw DataError("empty file: a header row is required");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    std::vector<std::string> header;
    for (auto& h : split_csv_line(line)) header.emplace_back(trim(h));

    std::optional<std::size_t> label_idx;
    if (options.label_column) {
        auto it = std::find(header.begin(), header.end(), *options.label_column);
        if (it == header.end()) throw DataError("label column '" + *options.label_column + "' not found");
        label_idx = static_cast<std::size_t>(it - header.begin());
    }
    std::vector<std::size_t> feature_idx;
    for (std::size_t j = 0; j < header.size(); ++j)
        if (j != label_idx) feature_idx.push_back(j);
    for (const auto& name : options.force_binary)
        if (std::find(header.begin(), header.end(), name) == header.end())
            throw DataError("column '" + name + "' not found");
    for (const auto& name : options.force_numeric)
        if (std::find(header.begin(), header.end(), name) == header.end())
            throw DataError("column '" + name + "' not found");

    const std::size_t d = feature_idx.size();
    std::vector<std::vector<std::optional<double>>> cells(d);
    std::vector<int> labels;
    std::size_t line_no = 1;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                            " fields, found " + std::to_string(fields.size()));
        if (label_idx) {
            auto v = is_missing(fields[*label_idx]) ? std::nullopt : parse_number(fields[*label_idx]);
            if (!v || (*v != 0.0 && *v != 1.0))
                throw DataError("line " + std::to_string(line_no) + ": non-binary label '" + fields[*label_idx] + "'");
            labels.push_back(static_cast<int>(*v));
        }
        for (std::size_t c = 0; c < d; ++c) {
            const std::string& tok = fields[feature_idx[c]];
            if (is_missing(tok)) {
                cells[c].emplace_back();
                continue;
            }
            auto v = parse_number(tok);
            if (!v)
                throw DataError("line " + std::to_string(line_no) + ": column '" + header[feature_idx[c]] +
                                "' holds non-numeric value '" + tok + "'");
            cells[c].push_back(v);
        }
        ++rows;
    }
    if (rows == 0) throw DataError("file has a header but no data rows");

    std::vector<Column> columns;
    std::vector<double> values(rows * d);
    std::vector<std::uint8_t> mask(rows * d, 0);
    for (std::size_t c = 0; c < d; ++c) {
        const std::string& name = header[feature_idx[c]];
        std::vector<double> present;
        for (const auto& v : cells[c])
            if (v) present.push_back(*v);
        if (present.empty()) throw DataError("column '" + name + "' has no values");
        const double mode = column_mode(present);
        bool all_binary = std::all_of(present.begin(), present.end(), [](double v) { return v == 0.0 || v == 1.0; });
        ColumnKind kind = all_binary ? ColumnKind::binary : ColumnKind::numeric;
        if (options.force_numeric.contains(name)) kind = ColumnKind::numeric;
        if (options.force_binary.contains(name)) {
            if (!all_binary) throw DataError("column '" + name + "' is declared binary but holds other values");
            kind = ColumnKind::binary;
        }
        columns.push_back({name, kind});
        for (std::size_t i = 0; i < rows; ++i) {
            if (cells[c][i]) {
                values[i * d + c] = *cells[c][i];
            } else {
                values[i * d + c] = mode;
                mask[i * d + c] = 1;
            }
        }
    }
    return Dataset(std::move(columns), std::move(values), std::move(labels), std::move(mask));
}

inline Dataset load_csv(const std::string& path, const CsvOptions& options) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    return read_csv(in, options);
}

/// Pair file: header `preferred_row,other_row`, 0-based rows of `instances`.
inline PairData read_pairs(std::istream& in, Dataset instances) {
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty pair file");
    auto header = split_csv_line(line);
    if (header.size() != 2 || trim(header[0]) != "preferred_row" || trim(header[1]) != "other_row")
        throw DataError("pair file header must be 'preferred_row,other_row'");
    PairData out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto f = split_csv_line(line);
        if (f.size() != 2) throw DataError("line " + std::to_string(line_no) + ": expected 2 fields");
        std::size_t idx[2];
        for (int k = 0; k < 2; ++k) {
            auto v = parse_number(f[k]);
            if (!v || *v < 0 || *v != static_cast<double>(static_cast<std::size_t>(*v)))
                throw DataError("line " + std::to_string(line_no) + ": invalid row index '" + f[k] + "'");
            idx[k] = static_cast<std::size_t>(*v);
            if (idx[k] >= instances.rows())
                throw DataError("line " + std::to_string(line_no) + ": dangling reference to row " + f[k]);
        }
        out.pairs.emplace_back(idx[0], idx[1]);
    }
    if (out.pairs.empty()) throw DataError("pair file contains no pairs");
    out.instances = std::move(instances);
    return out;
}

inline PairData load_pairs(const std::string& path, Dataset instances) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    return read_pairs(in, std::move(instances));
}

// ---------------------------------------------------------------------------
// Model documents

inline constexpr const char* format_version = "1";

struct DatasetFingerprint {
    std::size_t rows = 0;
    std::size_t columns = 0;
    std::string hash;
};

/// FNV-1a over column names/kinds, cell bits and labels.
inline DatasetFingerprint fingerprint(const Dataset& data) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const void* p, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 1099511628211ULL;
        }
    };
    for (const auto& c : data.columns()) {
        mix(c.name.data(), c.name.size());
        const char k = c.kind == ColumnKind::binary ? 'b' : 'n';
        mix(&k, 1);
    }
    for (double v : data.values()) mix(&v, sizeof v);
    for (int y : data.labels()) mix(&y, sizeof y);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return {data.rows(), data.cols(), buf};
}

inline json config_to_json(const FitConfig& c) {
    json j;
    j["score_set"] = c.score_set.values();
    j["positive_only"] = c.score_set.positive_only();
    j["calibrator"] = to_string(c.calibrator);
    j["binarization"] = to_string(c.binarization);
    j["strategy"] = to_string(c.strategy);
    j["objective"] = to_string(c.objective);
    j["max_stages"] = c.max_stages ? json(*c.max_stages) : json(nullptr);
    j["min_improvement"] = c.min_improvement ? json(*c.min_improvement) : json(nullptr);
    j["cal_fraction"] = c.cal_fraction;
    j["alpha"] = c.alpha;
    j["cost_ratio"] = c.cost_ratio;
    j["seed"] = c.seed;
    j["calibrate_in_scan"] = c.calibrate_in_scan;
    return j;
}

struct ModelDocument {
    ScoringList model;
    json fit_config = json::object();
    std::optional<DatasetFingerprint> dataset;
};

inline json model_to_json(const ScoringList& model) {
    json j;
    j["format_version"] = format_version;
    j["score_set"] = {{"values", model.score_set().values()}, {"positive_only", model.score_set().positive_only()}};
    j["cost_ratio_default"] = model.cost_ratio();
    j["alpha"] = model.alpha();
    j["ranking_only"] = model.ranking_only();
    json features = json::array();
    for (const auto& f : model.features())
        features.push_back({{"name", f.name},
                            {"score", f.score},
                            {"threshold", f.threshold ? json(*f.threshold) : json(nullptr)}});
    j["features"] = std::move(features);
    json stages = json::array();
    for (const auto& st : model.stages()) {
        json s;
        s["stage"] = st.stage;
        s["sigma"] = st.sigma;
        std::vector<std::size_t> pos, neg;
        for (const auto& c : st.support) {
            pos.push_back(c.positives);
            neg.push_back(c.negatives);
        }
        s["positives"] = pos;
        s["negatives"] = neg;
        if (st.has_probabilities()) {
            s["q_hat"] = st.q_hat;
            std::vector<double> lo, hi;
            for (const auto& b : st.band) {
                lo.push_back(b.lower);
                hi.push_back(b.upper);
            }
            s["lower"] = lo;
            s["upper"] = hi;
        }
        stages.push_back(std::move(s));
    }
    j["stages"] = std::move(stages);
    return j;
}

inline json document_to_json(const ModelDocument& doc) {
    json j = model_to_json(doc.model);
    j["fit_config"] = doc.fit_config;
    if (doc.dataset)
        j["dataset"] = {{"rows", doc.dataset->rows}, {"columns", doc.dataset->columns}, {"hash", doc.dataset->hash}};
    else
        j["dataset"] = nullptr;
    return j;
}

/// Canonical text: sorted keys, two-space indent, shortest round-trip floats.
inline std::string to_canonical(const json& j) { return j.dump(2) + "\n"; }

inline std::string save_model(const ModelDocument& doc) { return to_canonical(document_to_json(doc)); }

inline void save_model(const ModelDocument& doc, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << save_model(doc);
}

inline ModelDocument document_from_json(const json& j) {
    try {
        if (!j.is_object() || !j.contains("format_version")) throw DataError("model document lacks format_version");
        if (!j.at("format_version").is_string() || j.at("format_version").get<std::string>() != format_version)
            throw DataError("unsupported model format_version " + j.at("format_version").dump());
        ScoreSet set(j.at("score_set").at("values").get<std::vector<int>>(),
                     j.at("score_set").at("positive_only").get<bool>());
        std::vector<FeatureSpec> features;
        for (const auto& f : j.at("features")) {
            FeatureSpec spec{f.at("name").get<std::string>(), f.at("score").get<int>(), std::nullopt};
            if (!f.at("threshold").is_null()) spec.threshold = f.at("threshold").get<double>();
            features.push_back(std::move(spec));
        }
        std::vector<StageTable> stages;
        for (const auto& s : j.at("stages")) {
            StageTable st;
            st.stage = s.at("stage").get<std::size_t>();
            st.sigma = s.at("sigma").get<std::vector<int>>();
            auto pos = s.at("positives").get<std::vector<std::size_t>>();
            auto neg = s.at("negatives").get<std::vector<std::size_t>>();
            if (pos.size() != neg.size()) throw DataError("stage support arrays differ in length");
            for (std::size_t i = 0; i < pos.size(); ++i) st.support.push_back({pos[i], neg[i]});
            if (s.contains("q_hat")) {
                st.q_hat = s.at("q_hat").get<std::vector<double>>();
                auto lo = s.at("lower").get<std::vector<double>>();
                auto hi = s.at("upper").get<std::vector<double>>();
                if (lo.size() != hi.size()) throw DataError("stage band arrays differ in length");
                for (std::size_t i = 0; i < lo.size(); ++i) st.band.push_back({lo[i], hi[i]});
            }
            stages.push_back(std::move(st));
        }
        ModelDocument doc{ScoringList(std::move(set), std::move(features), std::move(stages),
                                      j.at("cost_ratio_default").get<double>(), j.at("alpha").get<double>()),
                          j.value("fit_config", json::object()), std::nullopt};
        if (j.contains("dataset") && !j.at("dataset").is_null()) {
            const auto& d = j.at("dataset");
            doc.dataset = DatasetFingerprint{d.at("rows").get<std::size_t>(), d.at("columns").get<std::size_t>(),
                                             d.at("hash").get<std::string>()};
        }
        return doc;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed model document: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw DataError(std::string("invalid model document: ") + e.what());
    }
}

inline ModelDocument parse_model(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw DataError("model parse error at byte " + std::to_string(e.byte) + ": " + e.what());
    }
    return document_from_json(j);
}

inline ModelDocument load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_model(ss.str());
}

// ---------------------------------------------------------------------------
// Reports

inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline json report_to_json(const StagewiseReport& r) {
    json j;
    j["metadata"] = {{"n_splits", r.n_splits},
                     {"train_fraction", r.train_fraction},
                     {"seed", r.seed},
                     {"stratified", r.stratified},
                     {"cost_ratio", r.cost_ratio},
                     {"band_alpha", r.band_alpha},
                     {"loss_mode", to_string(r.loss_mode)},
                     {"ci_method", r.ci_method},
                     {"ci_level", 0.95}};
    json metrics = json::object();
    for (const auto& [m, stages] : r.metrics) {
        json arr = json::array();
        for (const auto& s : stages)
            arr.push_back({{"stage", s.stage},
                           {"mean", s.mean},
                           {"ci_half_width", s.half_width},
                           {"ci_low", s.mean - s.half_width},
                           {"ci_high", s.mean + s.half_width},
                           {"n", s.n}});
        metrics[to_string(m)] = std::move(arr);
    }
    j["metrics"] = std::move(metrics);
    return j;
}

/// One row per stage per metric.
inline std::string report_to_csv(const StagewiseReport& r) {
    std::ostringstream out;
    out << "metric,stage,mean,ci_half_width,ci_low,ci_high,n_splits\n";
    for (const auto& [m, stages] : r.metrics)
        for (const auto& s : stages)
            out << to_string(m) << ',' << s.stage << ',' << format_double(s.mean) << ','
                << format_double(s.half_width) << ',' << format_double(s.mean - s.half_width) << ','
                << format_double(s.mean + s.half_width) << ',' << s.n << '\n';
    return out.str();
}

inline json threshold_report(const std::vector<std::optional<ThresholdChoice>>& choices) {
    json j = json::object();
    for (const auto& opt : choices) {
        if (!opt) continue;
        const ThresholdChoice& c = *opt;
        j[c.feature] = {{"threshold", c.threshold},
                        {"entropy", c.entropy},
                        {"strategy", to_string(c.strategy)},
                        {"mode", to_string(c.mode)},
                        {"sentinel", c.sentinel},
                        {"evaluations", c.evaluations}};
    }
    return j;
}

}  // namespace psl::io
