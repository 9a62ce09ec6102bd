#pragma once

// Interactive decision sessions over a fitted list, plus the HTTP binding.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "psl/core.hpp"
#include "psl/error.hpp"
#include "psl/io.hpp"

namespace psl::serve {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

struct Snapshot {
    std::size_t stage = 0;
    int total = 0;
    double q_hat = 0.0;
    Interval band;
    int recommendation = 0;
    double expected_loss = 0.0;
};

enum class SessionStatus { active, stopped };

inline const char* to_string(SessionStatus s) { return s == SessionStatus::active ? "active" : "stopped"; }

struct AnsweredFeature {
    std::string feature;
    double raw = 0.0;
    int value = 0;
};

struct DecisionSession {
    std::string id;
    std::string model_id;
    double cost_ratio = 10.0;
    std::vector<AnsweredFeature> answered;
    std::size_t stage = 0;
    int total = 0;
    Snapshot snapshot;
    SessionStatus status = SessionStatus::active;
};

/// Snapshot at stage k and total score T; the recommendation uses the upper
/// band end, the expected loss prices that decision at the point estimate.
inline Snapshot make_snapshot(const ScoringList& model, std::size_t k, int total, double cost_ratio) {
    Snapshot s;
    s.stage = k;
    s.total = total;
    s.q_hat = stage_probability(model, k, total);
    s.band = stage_interval(model, k, total);
    s.recommendation = decide(s.band.upper, cost_ratio);
    s.expected_loss = decision_loss(s.recommendation, s.q_hat, cost_ratio);
    return s;
}

/// 128 random bits as unpadded URL-safe base64 (22 characters).
inline std::string random_token(std::mt19937_64& rng) {
    static constexpr char alphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_";
    std::array<unsigned char, 16> bytes{};
    for (std::size_t i = 0; i < 16; i += 8) {
        const std::uint64_t r = rng();
        for (std::size_t j = 0; j < 8; ++j) bytes[i + j] = static_cast<unsigned char>(r >> (8 * j));
    }
    std::string out;
    std::uint32_t buf = 0;
    int bits = 0;
    for (unsigned char b : bytes) {
        buf = (buf << 8) | b;
        bits += 8;
        while (bits >= 6) {
            bits -= 6;
            out.push_back(alphabet[(buf >> bits) & 0x3F]);
        }
    }
    if (bits > 0) out.push_back(alphabet[(buf << (6 - bits)) & 0x3F]);
    return out;
}

inline json snapshot_to_json(const Snapshot& s) {
    return {{"stage", s.stage},
            {"total", s.total},
            {"q_hat", s.q_hat},
            {"lower", s.band.lower},
            {"upper", s.band.upper},
            {"recommendation", s.recommendation},
            {"expected_loss", s.expected_loss}};
}

struct ServiceOptions {
    std::string model_id = "default";
    std::chrono::seconds ttl = std::chrono::hours(1);
    std::optional<std::uint64_t> seed;
    std::function<Clock::time_point()> now = [] { return Clock::now(); };
};

/// In-memory session registry for one read-only model. Sessions are
/// serialized individually; the registry lock only guards lookup.
class SessionService {
public:
    explicit SessionService(ScoringList model, ServiceOptions options = {})
        : model_(std::move(model)), options_(std::move(options)) {
        if (model_.ranking_only()) throw InvalidArgument("sessions need a model with probability estimates");
        rng_.seed(options_.seed ? *options_.seed : std::random_device{}() ^ (std::uint64_t{std::random_device{}()} << 32));
    }

    const ScoringList& model() const { return model_; }
    const std::string& model_id() const { return options_.model_id; }

    json model_json() const {
        json j = io::model_to_json(model_);
        j["model_id"] = options_.model_id;
        return j;
    }

    DecisionSession create(std::optional<double> cost_ratio = std::nullopt,
                           std::optional<std::string> model_id = std::nullopt) {
        if (model_id && *model_id != options_.model_id) throw NotFound("unknown model '" + *model_id + "'");
        const double m = cost_ratio.value_or(model_.cost_ratio());
        if (!(m > 0.0) || !std::isfinite(m)) throw InvalidArgument("cost_ratio must be a positive number");
        auto entry = std::make_shared<Entry>();
        entry->session.model_id = options_.model_id;
        entry->session.cost_ratio = m;
        entry->session.snapshot = make_snapshot(model_, 0, 0, m);
        std::lock_guard lock(registry_mutex_);
        evict_locked();
        do {
            entry->session.id = random_token(rng_);
        } while (sessions_.contains(entry->session.id));
        entry->last_access = options_.now();
        sessions_.emplace(entry->session.id, entry);
        return entry->session;
    }

    DecisionSession get(const std::string& id) {
        auto entry = find(id);
        std::lock_guard lock(entry->mutex);
        return entry->session;
    }

    /// Answers the next feature in list order. `feature`, when given, must
    /// name that feature.
    DecisionSession answer(const std::string& id, double value, std::optional<std::string> feature = std::nullopt) {
        auto entry = find(id);
        std::lock_guard lock(entry->mutex);
        DecisionSession& s = entry->session;
        if (s.status == SessionStatus::stopped) throw Conflict("session is stopped");
        if (s.stage >= model_.size()) throw Conflict("every feature has been answered");
        const FeatureSpec& f = model_.features()[s.stage];
        if (feature && *feature != f.name)
            throw Conflict("next feature is '" + f.name + "', not '" + *feature + "'");
        if (!std::isfinite(value)) throw InvalidArgument("value must be a finite number");
        const int x = binarize_value(f, value);
        s.answered.push_back({f.name, value, x});
        s.total += f.score * x;
        ++s.stage;
        s.snapshot = make_snapshot(model_, s.stage, s.total, s.cost_ratio);
        return s;
    }

    DecisionSession stop(const std::string& id) {
        auto entry = find(id);
        std::lock_guard lock(entry->mutex);
        entry->session.status = SessionStatus::stopped;
        return entry->session;
    }

    /// Hypothetical snapshots for both outcomes of the next feature, if any.
    json preview(const DecisionSession& s) const {
        if (s.status == SessionStatus::stopped || s.stage >= model_.size()) return nullptr;
        const FeatureSpec& f = model_.features()[s.stage];
        return {{"feature", f.name},
                {"score", f.score},
                {"threshold", f.threshold ? json(*f.threshold) : json(nullptr)},
                {"if_0", snapshot_to_json(make_snapshot(model_, s.stage + 1, s.total, s.cost_ratio))},
                {"if_1", snapshot_to_json(make_snapshot(model_, s.stage + 1, s.total + f.score, s.cost_ratio))}};
    }

    json to_json(const DecisionSession& s) const {
        json answered = json::array();
        for (const auto& a : s.answered) answered.push_back({{"feature", a.feature}, {"raw", a.raw}, {"value", a.value}});
        return {{"id", s.id},
                {"model_id", s.model_id},
                {"status", to_string(s.status)},
                {"cost_ratio", s.cost_ratio},
                {"stage", s.stage},
                {"total", s.total},
                {"answered", std::move(answered)},
                {"snapshot", snapshot_to_json(s.snapshot)},
                {"next", preview(s)}};
    }

    std::size_t evict_expired() {
        std::lock_guard lock(registry_mutex_);
        return evict_locked();
    }

    std::size_t session_count() {
        std::lock_guard lock(registry_mutex_);
        return sessions_.size();
    }

private:
    struct Entry {
        std::mutex mutex;
        DecisionSession session;
        Clock::time_point last_access;
    };

    std::shared_ptr<Entry> find(const std::string& id) {
        std::lock_guard lock(registry_mutex_);
        evict_locked();
        auto it = sessions_.find(id);
        if (it == sessions_.end()) throw NotFound("unknown session '" + id + "'");
        it->second->last_access = options_.now();
        return it->second;
    }

    std::size_t evict_locked() {
        const auto now = options_.now();
        std::size_t removed = 0;
        for (auto it = sessions_.begin(); it != sessions_.end();) {
            if (now - it->second->last_access > options_.ttl) {
                it = sessions_.erase(it);
                ++removed;
            } else {
                ++it;
            }
        }
        return removed;
    }

    ScoringList model_;
    ServiceOptions options_;
    std::mutex registry_mutex_;
    std::map<std::string, std::shared_ptr<Entry>> sessions_;
    std::mt19937_64 rng_;
};

// ---------------------------------------------------------------------------
// HTTP binding

inline json error_body(const std::string& code, const std::string& message) {
    return {{"code", code}, {"message", message}};
}

inline void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json; charset=utf-8");
}

inline json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    json j = json::parse(req.body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw InvalidArgument("request body must be a JSON object");
    return j;
}

template <class Handler>
void guarded(httplib::Response& res, Handler&& handler) {
    try {
        handler();
    } catch (const NotFound& e) {
        send_json(res, 404, error_body("not_found", e.what()));
    } catch (const Conflict& e) {
        send_json(res, 409, error_body("conflict", e.what()));
    } catch (const InvalidArgument& e) {
        send_json(res, 400, error_body("invalid_argument", e.what()));
    } catch (const json::exception& e) {
        send_json(res, 400, error_body("invalid_argument", e.what()));
    } catch (const std::exception& e) {
        send_json(res, 500, error_body("internal", e.what()));
    }
}

inline double number_field(const json& body, const char* key) {
    const json& v = body.at(key);
    if (v.is_boolean()) return v.get<bool>() ? 1.0 : 0.0;
    if (!v.is_number()) throw InvalidArgument(std::string("'") + key + "' must be a number");
    return v.get<double>();
}

/// Registers every route on `server`; the service must outlive it.
inline void bind_routes(httplib::Server& server, SessionService& service) {
    static constexpr const char* session_path = R"(/sessions/([A-Za-z0-9_-]+))";
    server.Get("/model", [&service](const httplib::Request&, httplib::Response& res) {
        guarded(res, [&] { send_json(res, 200, service.model_json()); });
    });
    server.Post("/sessions", [&service](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const json body = parse_body(req);
            std::optional<double> m;
            std::optional<std::string> model_id;
            if (body.contains("cost_ratio") && !body["cost_ratio"].is_null()) m = number_field(body, "cost_ratio");
            if (body.contains("model_id") && !body["model_id"].is_null()) {
                if (!body["model_id"].is_string()) throw InvalidArgument("'model_id' must be a string");
                model_id = body["model_id"].get<std::string>();
            }
            send_json(res, 201, service.to_json(service.create(m, model_id)));
        });
    });
    server.Get(session_path, [&service](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] { send_json(res, 200, service.to_json(service.get(req.matches[1]))); });
    });
    server.Post(std::string(session_path) + "/answers", [&service](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const json body = parse_body(req);
            if (!body.contains("value")) throw InvalidArgument("'value' is required");
            std::optional<std::string> feature;
            if (body.contains("feature") && !body["feature"].is_null()) feature = body["feature"].get<std::string>();
            send_json(res, 200,
                      service.to_json(service.answer(req.matches[1], number_field(body, "value"), feature)));
        });
    });
    server.Post(std::string(session_path) + "/stop", [&service](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] { send_json(res, 200, service.to_json(service.stop(req.matches[1]))); });
    });
    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (res.body.empty()) send_json(res, res.status, error_body(res.status == 404 ? "not_found" : "error", "no such route"));
    });
}

}  // namespace psl::serve
