#pragma once

// Synthetic multi-signal vital-sign simulator. Three coupled signals per
// patient: s1 and s2 carry a demographic base level plus a sinusoid and
// unit Gaussian noise; the target s3 mixes its own sinusoid with lagged
// copies of s1 and s2. Rare events (sudden drops, surges, trend ramps) are
// sampled independently of the baseline noise and added on top, so every
// patient has an exact no-event counterfactual on the same RNG stream.
//
// Generation is deterministic: each patient draws from streams keyed by
// (seed, patient_index), which makes the dataset independent of generation
// order and thread count.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "vitalcast/core.hpp"
#include "vitalcast/parallel.hpp"
#include "vitalcast/rng.hpp"

namespace vitalcast {

struct EventConfig {
    double p_drop = 7e-4;              // per-step probability of a sudden drop in s2
    double drop_size = 7.0;
    double p_surge_after_drop = 0.75;  // surge in s3 at the next step, given a drop
    double p_surge_s2 = 5e-4;          // per-step probability of a surge in s2
    double p_surge_propagate = 0.6;    // copy of the s2 surge lands in s3 after the lag
    int propagate_lag = 2;
    double p_trend = 1e-4;             // per-step probability of a trend ramp in s3
    double surge_size = 7.0;
    double trend_slope = 1.0;          // ramp increment per step inside the event
    int duration_max = 10;             // durations ~ Uniform{0..duration_max}
    double range_sigma = 2.0;          // threshold for post-hoc range events

    void validate() const {
        for (double p : {p_drop, p_surge_after_drop, p_surge_s2, p_surge_propagate, p_trend}) {
            if (p < 0.0 || p > 1.0) throw std::invalid_argument("event probabilities must be in [0,1]");
        }
        if (!(drop_size > 0.0)) throw std::invalid_argument("drop_size must be > 0");
        if (duration_max < 0) throw std::invalid_argument("duration_max must be >= 0");
        if (propagate_lag < 0) throw std::invalid_argument("propagate_lag must be >= 0");
    }
};

// s1 = c11*age + c12*group + c13*sin(alpha1 t) + noise
// s2 = c21*age + c22*group + c23*sin(alpha2 t) + noise
// s3 = c31*sin(alpha3 t) + c32*s1(t-1) + c33*s2(t-2) + noise
struct CoefficientMatrix {
    double c11 = 0.5, c12 = 4.0, c13 = 3.0;
    double c21 = 0.8, c22 = 5.0, c23 = 2.5;
    double c31 = 2.0, c32 = 0.4, c33 = 0.3;
};

struct SimConfig {
    int n_patients = 1000;
    int n_steps = 500;
    double age_min = 18.0, age_max = 80.0;
    CoefficientMatrix coeff;
    double alpha1 = 0.11, alpha2 = 0.07, alpha3 = 0.05;
    double noise_std = 1.0;
    double step_seconds = 1.0;
    EventConfig events;
    std::uint64_t seed = 0;

    void validate() const {
        if (n_patients < 1 || n_steps < 1)
            throw std::invalid_argument("n_patients and n_steps must be >= 1");
        if (!(noise_std > 0.0)) throw std::invalid_argument("noise_std must be > 0");
        if (!(alpha1 > 0.0) || !(alpha2 > 0.0) || !(alpha3 > 0.0))
            throw std::invalid_argument("frequencies must be > 0");
        if (!(age_min < age_max)) throw std::invalid_argument("age range must be non-empty");
        if (!(step_seconds > 0.0)) throw std::invalid_argument("step_seconds must be > 0");
        events.validate();
    }
};

// An additive disturbance on one signal over an inclusive step window.
// Kind semantics: sudden_drop and surge add `magnitude` across the window;
// trend adds magnitude * (i - start + 1), a ramp that is nonzero already
// for a single-step window.
struct InjectedEvent {
    EventType kind = EventType::surge;
    int signal = 2;  // 0=s1, 1=s2, 2=s3
    std::int64_t start = 0;
    std::int64_t end = 0;  // inclusive
    double magnitude = 0.0;
};

struct SimulatedPatient {
    std::string patient_id;
    double age = 0.0;
    int group = 0;
    VitalSeries s1, s2, s3;
    std::vector<EventAnnotation> event_log;
};

namespace detail {

inline std::string patient_label(int index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "p%04d", index);
    return buf;
}

struct BaselineSignals {
    double age = 0.0;
    int group = 0;
    std::vector<double> s1, s2, s3;
};

inline BaselineSignals generate_baseline(const SimConfig& cfg, int patient_index) {
    BaselineSignals base;
    rng::Stream demo(cfg.seed, static_cast<std::uint64_t>(patient_index), rng::kSaltDemographics);
    base.age = demo.uniform(cfg.age_min, cfg.age_max);
    base.group = demo.bernoulli(0.5) ? 1 : 0;

    const int n = cfg.n_steps;
    rng::Stream noise(cfg.seed, static_cast<std::uint64_t>(patient_index), rng::kSaltNoise);
    std::vector<double> e1(n), e2(n), e3(n);
    for (int t = 0; t < n; ++t) e1[t] = noise.normal(0.0, cfg.noise_std);
    for (int t = 0; t < n; ++t) e2[t] = noise.normal(0.0, cfg.noise_std);
    for (int t = 0; t < n; ++t) e3[t] = noise.normal(0.0, cfg.noise_std);

    const auto& c = cfg.coeff;
    base.s1.resize(n);
    base.s2.resize(n);
    base.s3.resize(n);
    for (int t = 0; t < n; ++t) {
        base.s1[t] = c.c11 * base.age + c.c12 * base.group + c.c13 * std::sin(cfg.alpha1 * t) + e1[t];
        base.s2[t] = c.c21 * base.age + c.c22 * base.group + c.c23 * std::sin(cfg.alpha2 * t) + e2[t];
    }
    for (int t = 0; t < n; ++t) {
        const double lag1 = t >= 1 ? base.s1[t - 1] : 0.0;  // zero-padded lags
        const double lag2 = t >= 2 ? base.s2[t - 2] : 0.0;
        base.s3[t] = c.c31 * std::sin(cfg.alpha3 * t) + c.c32 * lag1 + c.c33 * lag2 + e3[t];
    }
    return base;
}

}  // namespace detail

// Draws the event placements for one patient. Separate from the baseline
// noise stream, so the same patient with and without events shares every
// baseline draw.
inline std::vector<InjectedEvent> sample_events(const SimConfig& cfg, int patient_index) {
    const auto& ev = cfg.events;
    const std::int64_t last = cfg.n_steps - 1;
    rng::Stream rng(cfg.seed, static_cast<std::uint64_t>(patient_index), rng::kSaltEvents);
    std::vector<InjectedEvent> out;
    auto clip = [last](std::int64_t i) { return std::min(i, last); };

    for (std::int64_t t = 0; t <= last; ++t) {
        if (rng.bernoulli(ev.p_drop)) {
            out.push_back({EventType::sudden_drop, 1, t, t, -ev.drop_size});
            if (rng.bernoulli(ev.p_surge_after_drop)) {
                const std::int64_t d = rng.uniform_int(0, ev.duration_max);
                if (t + 1 <= last)
                    out.push_back({EventType::surge, 2, t + 1, clip(t + 1 + d), ev.surge_size});
            }
        }
        if (rng.bernoulli(ev.p_surge_s2)) {
            const std::int64_t d = rng.uniform_int(0, ev.duration_max);
            out.push_back({EventType::surge, 1, t, clip(t + d), ev.surge_size});
            if (rng.bernoulli(ev.p_surge_propagate)) {
                const std::int64_t s = t + ev.propagate_lag;
                if (s <= last) out.push_back({EventType::surge, 2, s, clip(s + d), ev.surge_size});
            }
        }
        if (rng.bernoulli(ev.p_trend)) {
            const std::int64_t d = rng.uniform_int(0, ev.duration_max);
            out.push_back({EventType::trend, 2, t, clip(t + d), ev.trend_slope});
        }
    }
    return out;
}

// Adds the events on top of dense signal arrays (index 0 = step 0).
inline void apply_events(std::vector<double>& s1, std::vector<double>& s2, std::vector<double>& s3,
                         const std::vector<InjectedEvent>& events) {
    std::vector<double>* signals[3] = {&s1, &s2, &s3};
    for (const auto& e : events) {
        auto& sig = *signals[e.signal];
        for (std::int64_t i = e.start; i <= e.end && i < static_cast<std::int64_t>(sig.size()); ++i) {
            if (i < 0) continue;
            if (e.kind == EventType::trend) {
                sig[i] += e.magnitude * static_cast<double>(i - e.start + 1);
            } else {
                sig[i] += e.magnitude;
            }
        }
    }
}

inline SimulatedPatient generate_patient(const SimConfig& cfg, int patient_index) {
    cfg.validate();
    if (patient_index < 0 || patient_index >= cfg.n_patients)
        throw std::invalid_argument("patient_index out of range");

    auto base = detail::generate_baseline(cfg, patient_index);
    const auto events = sample_events(cfg, patient_index);
    apply_events(base.s1, base.s2, base.s3, events);

    SimulatedPatient p;
    p.patient_id = detail::patient_label(patient_index);
    p.age = base.age;
    p.group = base.group;
    p.s1 = series_from_values(p.patient_id, "s1", base.s1, cfg.step_seconds);
    p.s2 = series_from_values(p.patient_id, "s2", base.s2, cfg.step_seconds);
    p.s3 = series_from_values(p.patient_id, "s3", base.s3, cfg.step_seconds);
    const char* names[3] = {"s1", "s2", "s3"};
    for (const auto& e : events) {
        p.event_log.push_back({p.patient_id, names[e.signal], e.start, e.end, e.kind});
    }
    return p;
}

// Maximal contiguous runs of indices whose value lies further than
// range_sigma standard deviations from the series mean (mean/std over the
// whole series, population std). A constant series has std 0 and yields no
// events. Missing values break runs and are excluded from the statistics.
inline std::vector<EventAnnotation> detect_range_events(const VitalSeries& series,
                                                        double range_sigma) {
    std::vector<EventAnnotation> out;
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& v : series.values()) {
        if (!v.value) continue;
        sum += *v.value;
        ++n;
    }
    if (n == 0) return out;
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (const auto& v : series.values()) {
        if (!v.value) continue;
        const double d = *v.value - mean;
        ss += d * d;
    }
    const double std_dev = std::sqrt(ss / static_cast<double>(n));
    if (std_dev == 0.0) return out;

    const double threshold = range_sigma * std_dev;
    bool in_run = false;
    std::int64_t run_start = 0, prev_index = 0;
    auto flush = [&](std::int64_t end) {
        out.push_back({series.patient_id(), series.signal_name(), run_start, end, EventType::range});
        in_run = false;
    };
    for (const auto& v : series.values()) {
        const bool out_of_band = v.value && std::abs(*v.value - mean) > threshold;
        if (out_of_band) {
            if (in_run && v.index != prev_index + 1) flush(prev_index);
            if (!in_run) {
                in_run = true;
                run_start = v.index;
            }
            prev_index = v.index;
        } else if (in_run) {
            flush(prev_index);
        }
    }
    if (in_run) flush(prev_index);
    return out;
}

struct DatasetSummary {
    std::size_t n_patients = 0;
    std::map<EventType, std::size_t> injected_counts;
    std::size_t injected_total = 0;
    double mean_injected_per_patient = 0.0;
    std::size_t range_event_count = 0;  // detected on the target signal s3
    double mean_range_per_patient = 0.0;
};

inline DatasetSummary summarize_dataset(const std::vector<SimulatedPatient>& patients,
                                        double range_sigma) {
    DatasetSummary s;
    s.n_patients = patients.size();
    for (const auto& p : patients) {
        for (const auto& e : p.event_log) {
            ++s.injected_counts[e.event_type];
            ++s.injected_total;
        }
        s.range_event_count += detect_range_events(p.s3, range_sigma).size();
    }
    if (!patients.empty()) {
        s.mean_injected_per_patient =
            static_cast<double>(s.injected_total) / static_cast<double>(s.n_patients);
        s.mean_range_per_patient =
            static_cast<double>(s.range_event_count) / static_cast<double>(s.n_patients);
    }
    return s;
}

// Generates all patients, optionally across threads. Per-patient RNG
// streams make the result identical for any thread count.
inline std::vector<SimulatedPatient> generate_dataset(const SimConfig& cfg, int threads = 1) {
    cfg.validate();
    std::vector<SimulatedPatient> patients(static_cast<std::size_t>(cfg.n_patients));
    parallel_for_index(static_cast<std::size_t>(cfg.n_patients), threads, [&](std::size_t i) {
        patients[i] = generate_patient(cfg, static_cast<int>(i));
    });
    return patients;
}

}  // namespace vitalcast
