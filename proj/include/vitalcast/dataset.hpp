#pragma once

// Window construction: turns per-patient signal collections into
// (FeatureWindow, target) training examples and into one-step-ahead
// prediction series for evaluation. Windows touching a missing value are
// excluded rather than imputed.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vitalcast/core.hpp"
#include "vitalcast/models.hpp"
#include "vitalcast/simulator.hpp"

namespace vitalcast {

// One patient's signals plus optional static features, the model-facing
// view of both simulated and ingested datasets.
struct PatientRecord {
    std::string patient_id;
    std::vector<VitalSeries> signals;
    std::vector<double> statics;

    const VitalSeries* find_signal(const std::string& name) const {
        for (const auto& s : signals)
            if (s.signal_name() == name) return &s;
        return nullptr;
    }
};

inline PatientRecord to_record(const SimulatedPatient& p, bool include_statics = false) {
    PatientRecord r;
    r.patient_id = p.patient_id;
    r.signals = {p.s1, p.s2, p.s3};
    if (include_statics) r.statics = {p.age, static_cast<double>(p.group)};
    return r;
}

inline std::vector<PatientRecord> to_records(const std::vector<SimulatedPatient>& patients,
                                             bool include_statics = false) {
    std::vector<PatientRecord> out;
    out.reserve(patients.size());
    for (const auto& p : patients) out.push_back(to_record(p, include_statics));
    return out;
}

// Which lags feed the model. Lag values are taken at t-1 .. t-lags when
// predicting the value at t.
struct WindowSpec {
    int lags = 3;
    std::string target_signal = "s3";
    std::vector<std::string> aux_signals = {"s1", "s2"};
    bool include_statics = false;
};

inline std::optional<FeatureWindow> make_window(const PatientRecord& record, const WindowSpec& spec,
                                                std::int64_t t) {
    const VitalSeries* target = record.find_signal(spec.target_signal);
    if (!target) return std::nullopt;
    FeatureWindow w;
    w.target_lags.reserve(static_cast<std::size_t>(spec.lags));
    for (int k = spec.lags; k >= 1; --k) {  // oldest lag first
        const auto v = target->value_at(t - k);
        if (!v) return std::nullopt;
        w.target_lags.push_back(*v);
    }
    for (const auto& name : spec.aux_signals) {
        const VitalSeries* aux = record.find_signal(name);
        if (!aux) return std::nullopt;
        for (int k = spec.lags; k >= 1; --k) {
            const auto v = aux->value_at(t - k);
            if (!v) return std::nullopt;
            w.aux_values.push_back(*v);
        }
    }
    if (spec.include_statics) w.statics = record.statics;
    return w;
}

struct SampleMeta {
    std::size_t patient = 0;  // position in the record list
    std::int64_t t = 0;       // index being predicted
};

struct WindowDataset {
    std::size_t feature_dim = 0;
    std::vector<std::vector<double>> features;
    std::vector<double> targets;
    std::vector<SampleMeta> meta;

    std::size_t size() const { return targets.size(); }
};

inline WindowDataset build_window_dataset(const std::vector<PatientRecord>& records,
                                          const WindowSpec& spec) {
    WindowDataset ds;
    for (std::size_t pi = 0; pi < records.size(); ++pi) {
        const auto& rec = records[pi];
        const VitalSeries* target = rec.find_signal(spec.target_signal);
        if (!target) continue;
        for (const auto& tv : target->values()) {
            if (!tv.value) continue;
            const auto w = make_window(rec, spec, tv.index);
            if (!w) continue;
            auto feats = w->features();
            if (ds.features.empty()) ds.feature_dim = feats.size();
            ds.features.push_back(std::move(feats));
            ds.targets.push_back(*tv.value);
            ds.meta.push_back({pi, tv.index});
        }
    }
    return ds;
}

// One-step-ahead predictions for every index of the target series that has
// a full lag window. Indices without a window stay absent.
inline PredictionSeries predict_series(const ModelParams& params, const PatientRecord& record,
                                       const WindowSpec& spec) {
    const VitalSeries* target = record.find_signal(spec.target_signal);
    if (!target) throw std::invalid_argument("record lacks target signal " + spec.target_signal);
    std::vector<ObservedValue> out;
    out.reserve(target->size());
    for (const auto& tv : target->values()) {
        const auto w = make_window(record, spec, tv.index);
        if (!w) continue;
        out.push_back({tv.index, predict(params, *w)});
    }
    return {VitalSeries(record.patient_id, target->signal_name(), target->step_seconds(),
                        std::move(out)),
            params.model_id};
}

// Mean/scale standardization fitted on a training set, stored on the model
// so serialized parameters stay self-contained.
inline void fit_standardization(ModelParams& params, const WindowDataset& ds) {
    const std::size_t d = ds.feature_dim;
    params.feature_mean.assign(d, 0.0);
    params.feature_scale.assign(d, 1.0);
    if (ds.size() == 0) return;
    for (const auto& row : ds.features)
        for (std::size_t i = 0; i < d; ++i) params.feature_mean[i] += row[i];
    for (auto& m : params.feature_mean) m /= static_cast<double>(ds.size());
    std::vector<double> var(d, 0.0);
    for (const auto& row : ds.features)
        for (std::size_t i = 0; i < d; ++i) {
            const double dv = row[i] - params.feature_mean[i];
            var[i] += dv * dv;
        }
    for (std::size_t i = 0; i < d; ++i) {
        const double sd = std::sqrt(var[i] / static_cast<double>(ds.size()));
        params.feature_scale[i] = sd > 1e-12 ? sd : 1.0;
    }
}

}  // namespace vitalcast
