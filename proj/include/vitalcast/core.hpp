#pragma once

// Core domain types for vital-sign prediction: time-indexed series with
// explicit missing values, event annotations, metric parameter bundles, and
// the alignment/RMSE primitives every other module builds on.
//
// All types are immutable after construction and all operations are pure,
// so everything here is safe to share across threads.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace vitalcast {

struct MismatchedIdentity : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EmptyAlignment : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EmptyWindow : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One time-indexed sample. Missing values are first class: they are carried
// explicitly and never imputed by any metric.
struct ObservedValue {
    std::int64_t index = 0;
    std::optional<double> value;
};

// A single patient's signal. Indices are strictly increasing; an index that
// is absent counts as missing just like an explicit missing marker.
class VitalSeries {
public:
    VitalSeries() = default;
    VitalSeries(std::string patient_id, std::string signal_name, double step_seconds,
                std::vector<ObservedValue> values)
        : patient_id_(std::move(patient_id)),
          signal_name_(std::move(signal_name)),
          step_seconds_(step_seconds),
          values_(std::move(values)) {
        if (!(step_seconds_ > 0.0)) throw std::invalid_argument("step_seconds must be > 0");
        for (std::size_t i = 1; i < values_.size(); ++i) {
            if (values_[i].index <= values_[i - 1].index)
                throw std::invalid_argument("series indices must be strictly increasing");
        }
        for (const auto& v : values_) {
            if (v.index < 0) throw std::invalid_argument("series indices must be non-negative");
        }
    }

    const std::string& patient_id() const { return patient_id_; }
    const std::string& signal_name() const { return signal_name_; }
    double step_seconds() const { return step_seconds_; }
    const std::vector<ObservedValue>& values() const { return values_; }
    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty(); }

    std::optional<double> value_at(std::int64_t index) const {
        auto it = std::lower_bound(values_.begin(), values_.end(), index,
                                   [](const ObservedValue& v, std::int64_t i) { return v.index < i; });
        if (it == values_.end() || it->index != index) return std::nullopt;
        return it->value;
    }

    bool has_value_at(std::int64_t index) const { return value_at(index).has_value(); }

    std::vector<std::int64_t> non_missing_indices() const {
        std::vector<std::int64_t> out;
        out.reserve(values_.size());
        for (const auto& v : values_)
            if (v.value) out.push_back(v.index);
        return out;
    }

private:
    std::string patient_id_;
    std::string signal_name_;
    double step_seconds_ = 1.0;
    std::vector<ObservedValue> values_;
};

// Model output over the same index space as a VitalSeries.
struct PredictionSeries {
    VitalSeries series;
    std::string model_id;
};

inline VitalSeries series_from_values(std::string patient_id, std::string signal_name,
                                      const std::vector<double>& dense_values,
                                      double step_seconds = 1.0, std::int64_t first_index = 0) {
    std::vector<ObservedValue> vals;
    vals.reserve(dense_values.size());
    for (std::size_t i = 0; i < dense_values.size(); ++i)
        vals.push_back({first_index + static_cast<std::int64_t>(i), dense_values[i]});
    return VitalSeries(std::move(patient_id), std::move(signal_name), step_seconds, std::move(vals));
}

// Parameters of the two-sided sigmoid utility curve for out-of-range values.
// Steepness values are stored positive; the curve orientation (rising toward
// the plateau beyond each threshold) is applied internally by the utility
// functions.
struct NormalRangeParams {
    double amplitude = 1.0;        // plateau height L
    double steepness_low = 0.5;    // k_l
    double steepness_high = 0.5;   // k_h
    double low_threshold = 60.0;   // l
    double high_threshold = 100.0; // h

    void validate() const {
        if (!(amplitude > 0.0)) throw std::invalid_argument("amplitude must be > 0");
        if (!(steepness_low > 0.0) || !(steepness_high > 0.0))
            throw std::invalid_argument("steepness values must be > 0");
        if (!(low_threshold < high_threshold))
            throw std::invalid_argument("low_threshold must be < high_threshold");
    }
};

// Window sizes and asymmetry weights for the trend costs. weight_over
// penalizes a predicted trend above the actual one; weight_under the
// opposite direction.
struct TrendParams {
    int lookback_n = 5;
    int horizon_m = 3;
    double weight_over = 1.0;   // w_l
    double weight_under = 1.0;  // w_h

    void validate() const {
        if (lookback_n < 2) throw std::invalid_argument("lookback_n must be >= 2");
        if (horizon_m < 1) throw std::invalid_argument("horizon_m must be >= 1");
        if (weight_over < 0.0 || weight_under < 0.0)
            throw std::invalid_argument("trend weights must be >= 0");
        if (weight_over == 0.0 && weight_under == 0.0)
            throw std::invalid_argument("trend weights must not both be zero");
    }
};

enum class EventType { sudden_drop, surge, trend, range, annotated };

inline const char* to_string(EventType t) {
    switch (t) {
        case EventType::sudden_drop: return "sudden_drop";
        case EventType::surge: return "surge";
        case EventType::trend: return "trend";
        case EventType::range: return "range";
        case EventType::annotated: return "annotated";
    }
    return "unknown";
}

inline std::optional<EventType> event_type_from_string(const std::string& s) {
    if (s == "sudden_drop") return EventType::sudden_drop;
    if (s == "surge") return EventType::surge;
    if (s == "trend") return EventType::trend;
    if (s == "range") return EventType::range;
    if (s == "annotated") return EventType::annotated;
    return std::nullopt;
}

// A tagged index window [start_index, end_index], both ends inclusive.
struct EventAnnotation {
    std::string patient_id;
    std::string signal_name;
    std::int64_t start_index = 0;
    std::int64_t end_index = 0;
    EventType event_type = EventType::annotated;

    void validate() const {
        if (start_index > end_index)
            throw std::invalid_argument("event start_index must be <= end_index");
    }
    std::int64_t length() const { return end_index - start_index + 1; }
};

// Result of aligning a prediction to its ground truth: the ordered set of
// indices where both carry a value, with those values extracted.
struct AlignedPair {
    VitalSeries truth;
    PredictionSeries prediction;
    std::vector<std::int64_t> indices;
    std::vector<double> truth_values;
    std::vector<double> predicted_values;

    bool empty() const { return indices.empty(); }
    std::size_t size() const { return indices.size(); }
};

inline AlignedPair align(const VitalSeries& truth, const PredictionSeries& prediction) {
    if (truth.patient_id() != prediction.series.patient_id() ||
        truth.signal_name() != prediction.series.signal_name()) {
        throw MismatchedIdentity("cannot align '" + truth.patient_id() + "/" + truth.signal_name() +
                                 "' with '" + prediction.series.patient_id() + "/" +
                                 prediction.series.signal_name() + "'");
    }
    AlignedPair pair{truth, prediction, {}, {}, {}};
    for (const auto& tv : truth.values()) {
        if (!tv.value) continue;
        const auto pv = prediction.series.value_at(tv.index);
        if (!pv) continue;
        pair.indices.push_back(tv.index);
        pair.truth_values.push_back(*tv.value);
        pair.predicted_values.push_back(*pv);
    }
    return pair;
}

inline double rmse(const AlignedPair& pair) {
    if (pair.empty()) throw EmptyAlignment("rmse over empty alignment");
    double sum_sq = 0.0;
    for (std::size_t i = 0; i < pair.size(); ++i) {
        const double d = pair.truth_values[i] - pair.predicted_values[i];
        sum_sq += d * d;
    }
    return std::sqrt(sum_sq / static_cast<double>(pair.size()));
}

// RMSE restricted to the aligned indices inside the event window.
inline double window_rmse(const AlignedPair& pair, const EventAnnotation& event) {
    event.validate();
    double sum_sq = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < pair.size(); ++i) {
        const std::int64_t idx = pair.indices[i];
        if (idx < event.start_index || idx > event.end_index) continue;
        const double d = pair.truth_values[i] - pair.predicted_values[i];
        sum_sq += d * d;
        ++n;
    }
    if (n == 0) throw EmptyWindow("no aligned index in event window");
    return std::sqrt(sum_sq / static_cast<double>(n));
}

}  // namespace vitalcast
