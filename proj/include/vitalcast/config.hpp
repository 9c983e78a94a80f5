#pragma once

// JSON run configuration. Every command is fully reconstructible from its
// config file plus CLI overrides; the merged effective config is written
// next to the outputs. Unknown keys are hard errors so a typo in a lambda
// or probability cannot silently change an experiment.

#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "vitalcast/core.hpp"
#include "vitalcast/dataset.hpp"
#include "vitalcast/models.hpp"
#include "vitalcast/simulator.hpp"
#include "vitalcast/training.hpp"

namespace vitalcast {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

// Tracks which keys of one JSON object were consumed; leftovers are errors.
class ConfigReader {
public:
    ConfigReader(const nlohmann::json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
        if (!obj_.is_object()) throw ConfigError(path_ + " must be an object");
    }

    bool has(const std::string& key) const { return obj_.contains(key); }

    double number(const std::string& key, double fallback) {
        if (!mark(key)) return fallback;
        const auto& v = obj_.at(key);
        if (!v.is_number()) throw ConfigError(key_path(key) + " must be a number");
        return v.get<double>();
    }

    std::int64_t integer(const std::string& key, std::int64_t fallback) {
        if (!mark(key)) return fallback;
        const auto& v = obj_.at(key);
        if (!v.is_number_integer()) throw ConfigError(key_path(key) + " must be an integer");
        return v.get<std::int64_t>();
    }

    std::uint64_t uinteger(const std::string& key, std::uint64_t fallback) {
        if (!mark(key)) return fallback;
        const auto& v = obj_.at(key);
        if (!v.is_number_integer() || (v.is_number_integer() && v.get<std::int64_t>() < 0 &&
                                       !v.is_number_unsigned()))
            throw ConfigError(key_path(key) + " must be a non-negative integer");
        return v.get<std::uint64_t>();
    }

    bool boolean(const std::string& key, bool fallback) {
        if (!mark(key)) return fallback;
        const auto& v = obj_.at(key);
        if (!v.is_boolean()) throw ConfigError(key_path(key) + " must be a boolean");
        return v.get<bool>();
    }

    std::string text(const std::string& key, std::string fallback) {
        if (!mark(key)) return fallback;
        const auto& v = obj_.at(key);
        if (!v.is_string()) throw ConfigError(key_path(key) + " must be a string");
        return v.get<std::string>();
    }

    std::vector<std::string> text_list(const std::string& key, std::vector<std::string> fallback) {
        if (!mark(key)) return fallback;
        const auto& v = obj_.at(key);
        if (!v.is_array()) throw ConfigError(key_path(key) + " must be an array of strings");
        std::vector<std::string> out;
        for (const auto& e : v) {
            if (!e.is_string()) throw ConfigError(key_path(key) + " must contain only strings");
            out.push_back(e.get<std::string>());
        }
        return out;
    }

    const nlohmann::json* object(const std::string& key) {
        if (!mark(key)) return nullptr;
        const auto& v = obj_.at(key);
        if (!v.is_object()) throw ConfigError(key_path(key) + " must be an object");
        return &v;
    }

    const nlohmann::json* array(const std::string& key) {
        if (!mark(key)) return nullptr;
        const auto& v = obj_.at(key);
        if (!v.is_array()) throw ConfigError(key_path(key) + " must be an array");
        return &v;
    }

    std::string key_path(const std::string& key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

    void finish() const {
        for (const auto& item : obj_.items()) {
            if (!seen_.count(item.key()))
                throw ConfigError("unknown config key: " + key_path(item.key()));
        }
    }

private:
    bool mark(const std::string& key) {
        seen_.insert(key);
        return obj_.contains(key);
    }

    const nlohmann::json& obj_;
    std::string path_;
    std::set<std::string> seen_;
};

}  // namespace detail

// ---- simulation -----------------------------------------------------------

inline SimConfig sim_config_from_json(const nlohmann::json& j, const std::string& path = "sim") {
    detail::ConfigReader r(j, path);
    SimConfig cfg;
    cfg.n_patients = static_cast<int>(r.integer("n_patients", cfg.n_patients));
    cfg.n_steps = static_cast<int>(r.integer("n_steps", cfg.n_steps));
    cfg.age_min = r.number("age_min", cfg.age_min);
    cfg.age_max = r.number("age_max", cfg.age_max);
    cfg.alpha1 = r.number("alpha1", cfg.alpha1);
    cfg.alpha2 = r.number("alpha2", cfg.alpha2);
    cfg.alpha3 = r.number("alpha3", cfg.alpha3);
    cfg.noise_std = r.number("noise_std", cfg.noise_std);
    cfg.step_seconds = r.number("step_seconds", cfg.step_seconds);
    cfg.seed = r.uinteger("seed", cfg.seed);
    if (const auto* c = r.object("coefficients")) {
        detail::ConfigReader rc(*c, path + ".coefficients");
        cfg.coeff.c11 = rc.number("c11", cfg.coeff.c11);
        cfg.coeff.c12 = rc.number("c12", cfg.coeff.c12);
        cfg.coeff.c13 = rc.number("c13", cfg.coeff.c13);
        cfg.coeff.c21 = rc.number("c21", cfg.coeff.c21);
        cfg.coeff.c22 = rc.number("c22", cfg.coeff.c22);
        cfg.coeff.c23 = rc.number("c23", cfg.coeff.c23);
        cfg.coeff.c31 = rc.number("c31", cfg.coeff.c31);
        cfg.coeff.c32 = rc.number("c32", cfg.coeff.c32);
        cfg.coeff.c33 = rc.number("c33", cfg.coeff.c33);
        rc.finish();
    }
    if (const auto* e = r.object("events")) {
        detail::ConfigReader re(*e, path + ".events");
        auto& ev = cfg.events;
        ev.p_drop = re.number("p_drop", ev.p_drop);
        ev.drop_size = re.number("drop_size", ev.drop_size);
        ev.p_surge_after_drop = re.number("p_surge_after_drop", ev.p_surge_after_drop);
        ev.p_surge_s2 = re.number("p_surge_s2", ev.p_surge_s2);
        ev.p_surge_propagate = re.number("p_surge_propagate", ev.p_surge_propagate);
        ev.propagate_lag = static_cast<int>(re.integer("propagate_lag", ev.propagate_lag));
        ev.p_trend = re.number("p_trend", ev.p_trend);
        ev.surge_size = re.number("surge_size", ev.surge_size);
        ev.trend_slope = re.number("trend_slope", ev.trend_slope);
        ev.duration_max = static_cast<int>(re.integer("duration_max", ev.duration_max));
        ev.range_sigma = re.number("range_sigma", ev.range_sigma);
        re.finish();
    }
    r.finish();
    cfg.validate();
    return cfg;
}

inline nlohmann::json sim_config_to_json(const SimConfig& cfg) {
    nlohmann::json j;
    j["n_patients"] = cfg.n_patients;
    j["n_steps"] = cfg.n_steps;
    j["age_min"] = cfg.age_min;
    j["age_max"] = cfg.age_max;
    j["alpha1"] = cfg.alpha1;
    j["alpha2"] = cfg.alpha2;
    j["alpha3"] = cfg.alpha3;
    j["noise_std"] = cfg.noise_std;
    j["step_seconds"] = cfg.step_seconds;
    j["seed"] = cfg.seed;
    j["coefficients"] = {{"c11", cfg.coeff.c11}, {"c12", cfg.coeff.c12}, {"c13", cfg.coeff.c13},
                         {"c21", cfg.coeff.c21}, {"c22", cfg.coeff.c22}, {"c23", cfg.coeff.c23},
                         {"c31", cfg.coeff.c31}, {"c32", cfg.coeff.c32}, {"c33", cfg.coeff.c33}};
    j["events"] = {{"p_drop", cfg.events.p_drop},
                   {"drop_size", cfg.events.drop_size},
                   {"p_surge_after_drop", cfg.events.p_surge_after_drop},
                   {"p_surge_s2", cfg.events.p_surge_s2},
                   {"p_surge_propagate", cfg.events.p_surge_propagate},
                   {"propagate_lag", cfg.events.propagate_lag},
                   {"p_trend", cfg.events.p_trend},
                   {"surge_size", cfg.events.surge_size},
                   {"trend_slope", cfg.events.trend_slope},
                   {"duration_max", cfg.events.duration_max},
                   {"range_sigma", cfg.events.range_sigma}};
    return j;
}

// ---- metric parameters ------------------------------------------------------

inline NormalRangeParams range_params_from_json(const nlohmann::json& j, const std::string& path) {
    detail::ConfigReader r(j, path);
    NormalRangeParams p;
    p.amplitude = r.number("amplitude", p.amplitude);
    p.steepness_low = r.number("steepness_low", p.steepness_low);
    p.steepness_high = r.number("steepness_high", p.steepness_high);
    p.low_threshold = r.number("low_threshold", p.low_threshold);
    p.high_threshold = r.number("high_threshold", p.high_threshold);
    r.finish();
    p.validate();
    return p;
}

inline nlohmann::json range_params_to_json(const NormalRangeParams& p) {
    return {{"amplitude", p.amplitude},
            {"steepness_low", p.steepness_low},
            {"steepness_high", p.steepness_high},
            {"low_threshold", p.low_threshold},
            {"high_threshold", p.high_threshold}};
}

inline TrendParams trend_params_from_json(const nlohmann::json& j, const std::string& path) {
    detail::ConfigReader r(j, path);
    TrendParams p;
    p.lookback_n = static_cast<int>(r.integer("lookback_n", p.lookback_n));
    p.horizon_m = static_cast<int>(r.integer("horizon_m", p.horizon_m));
    p.weight_over = r.number("weight_over", p.weight_over);
    p.weight_under = r.number("weight_under", p.weight_under);
    r.finish();
    p.validate();
    return p;
}

inline nlohmann::json trend_params_to_json(const TrendParams& p) {
    return {{"lookback_n", p.lookback_n},
            {"horizon_m", p.horizon_m},
            {"weight_over", p.weight_over},
            {"weight_under", p.weight_under}};
}

inline WindowSpec window_spec_from_json(const nlohmann::json& j, const std::string& path) {
    detail::ConfigReader r(j, path);
    WindowSpec spec;
    spec.lags = static_cast<int>(r.integer("lags", spec.lags));
    spec.target_signal = r.text("target_signal", spec.target_signal);
    spec.aux_signals = r.text_list("aux_signals", spec.aux_signals);
    spec.include_statics = r.boolean("include_statics", spec.include_statics);
    r.finish();
    if (spec.lags < 1) throw ConfigError(path + ".lags must be >= 1");
    return spec;
}

inline nlohmann::json window_spec_to_json(const WindowSpec& spec) {
    return {{"lags", spec.lags},
            {"target_signal", spec.target_signal},
            {"aux_signals", spec.aux_signals},
            {"include_statics", spec.include_statics}};
}

// ---- training ---------------------------------------------------------------

inline WarmStartSchedule schedule_from_json(const nlohmann::json& j, const std::string& path) {
    detail::ConfigReader r(j, path);
    WarmStartSchedule s;
    s.warm_epochs = static_cast<int>(r.integer("warm_epochs", s.warm_epochs));
    s.stabilization_patience =
        static_cast<int>(r.integer("stabilization_patience", s.stabilization_patience));
    s.stabilization_tol = r.number("stabilization_tol", s.stabilization_tol);
    s.learning_rate = r.number("learning_rate", s.learning_rate);
    s.batch_size = static_cast<int>(r.integer("batch_size", s.batch_size));
    s.max_epochs = static_cast<int>(r.integer("max_epochs", s.max_epochs));
    s.seed = r.uinteger("seed", s.seed);
    if (const auto* phases = r.array("phases")) {
        for (std::size_t i = 0; i < phases->size(); ++i) {
            const std::string ppath = path + ".phases[" + std::to_string(i) + "]";
            detail::ConfigReader rp((*phases)[i], ppath);
            PhaseSpec ph;
            const std::string term = rp.text("term", "");
            const auto t = loss_term_from_string(term);
            if (!t || *t == LossTerm::mse)
                throw ConfigError(ppath + ".term must be one of range, trend, trend_dev");
            ph.term = *t;
            ph.lambda_start = rp.number("lambda_start", ph.lambda_start);
            ph.lambda_end = rp.number("lambda_end", ph.lambda_end);
            ph.escalation_epochs = static_cast<int>(rp.integer("escalation_epochs", ph.escalation_epochs));
            ph.auto_balance = rp.boolean("auto_balance", ph.auto_balance);
            rp.finish();
            s.phases.push_back(ph);
        }
    }
    r.finish();
    s.validate();
    return s;
}

inline nlohmann::json schedule_to_json(const WarmStartSchedule& s) {
    nlohmann::json phases = nlohmann::json::array();
    for (const auto& ph : s.phases) {
        phases.push_back({{"term", to_string(ph.term)},
                          {"lambda_start", ph.lambda_start},
                          {"lambda_end", ph.lambda_end},
                          {"escalation_epochs", ph.escalation_epochs},
                          {"auto_balance", ph.auto_balance}});
    }
    return {{"warm_epochs", s.warm_epochs},
            {"phases", phases},
            {"stabilization_patience", s.stabilization_patience},
            {"stabilization_tol", s.stabilization_tol},
            {"learning_rate", s.learning_rate},
            {"batch_size", s.batch_size},
            {"max_epochs", s.max_epochs},
            {"seed", s.seed}};
}

// Parses a JSON document; parse errors are reported with the line computed
// from the parser's byte position.
inline nlohmann::json parse_config_text(const std::string& text, const std::string& file) {
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        std::size_t line = 1;
        const std::size_t limit = std::min(e.byte, text.size());
        for (std::size_t i = 0; i < limit; ++i)
            if (text[i] == '\n') ++line;
        throw ConfigError(file + ":" + std::to_string(line) + ": " + e.what());
    }
}

}  // namespace vitalcast
