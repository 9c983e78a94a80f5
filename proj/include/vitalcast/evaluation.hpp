#pragma once

// Evaluation artifacts: per-model reports combining overall RMSE, the three
// utility costs, and per-event-type window RMSE; model rankings; Spearman
// rank correlation; and a paired t-test over event-level errors with a
// dependency-free Student-t CDF.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "vitalcast/core.hpp"
#include "vitalcast/utility.hpp"

namespace vitalcast {

struct ZeroVariance : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct TooFewSamples : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DegenerateInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct MissingMetric : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

// Regularized incomplete beta I_x(a, b) by Lentz's continued fraction.
inline double incbeta_cf(double a, double b, double x) {
    constexpr double kTiny = 1e-30;
    constexpr double kEps = 1e-14;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 500; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) return h;
    }
    throw std::runtime_error("incomplete beta continued fraction did not converge");
}

inline double regularized_incomplete_beta(double a, double b, double x) {
    if (x < 0.0 || x > 1.0) throw std::invalid_argument("incomplete beta needs x in [0,1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log(1.0 - x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * incbeta_cf(a, b, x) / a;
    return 1.0 - front * incbeta_cf(b, a, 1.0 - x) / b;
}

}  // namespace detail

// Two-sided tail probability of Student's t with the given degrees of
// freedom: P(|T| >= |t|) = I_{df/(df+t^2)}(df/2, 1/2).
inline double student_t_two_sided_p(double t, double df) {
    if (!(df > 0.0)) throw std::invalid_argument("degrees of freedom must be > 0");
    if (std::isnan(t)) throw std::invalid_argument("t statistic is NaN");
    return detail::regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
}

struct TTestResult {
    double t_statistic = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
};

// One-sample paired t-test on precomputed differences, two-sided p.
inline TTestResult paired_t_test(const std::vector<double>& differences) {
    const std::size_t n = differences.size();
    if (n < 2) throw TooFewSamples("paired t-test needs at least 2 differences");
    double mean = 0.0;
    for (double d : differences) mean += d;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double d : differences) ss += (d - mean) * (d - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (sd == 0.0) throw ZeroVariance("all differences are equal");
    const double t = mean / (sd / std::sqrt(static_cast<double>(n)));
    return {t, student_t_two_sided_p(t, static_cast<double>(n - 1)), n};
}

// Ranks with ties sharing their average rank.
inline std::vector<double> average_ranks(const std::vector<double>& xs) {
    const std::size_t n = xs.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

inline double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size()) throw std::invalid_argument("spearman needs equal lengths");
    if (xs.size() < 2) throw TooFewSamples("spearman needs at least 2 points");
    const auto rx = average_ranks(xs);
    const auto ry = average_ranks(ys);
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = rx[i] - mx, dy = ry[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw DegenerateInput("constant input to spearman");
    return sxy / std::sqrt(sxx * syy);
}

struct EventTypeStats {
    double mean_window_rmse = 0.0;
    std::size_t event_count = 0;
};

struct EvaluationReport {
    std::string model_id;
    double overall_rmse = 0.0;
    UtilityBreakdown utility;
    std::map<EventType, EventTypeStats> per_event_type;
    std::size_t skipped_windows = 0;   // annotations with no aligned index
    std::size_t skipped_patients = 0;  // pairs with empty alignment
    std::size_t aligned_points = 0;
};

// Aggregates RMSE, utility costs, and per-event-type window RMSE over a set
// of patients. Predictions are matched to truth by (patient, signal);
// annotations apply to their own (patient, signal) pair. Patients whose
// alignment is empty are skipped; the call fails only if nothing remains.
//
// Per-event-type aggregation defaults to the unweighted mean of per-event
// window RMSEs; pooled_window_rmse switches to point-weighted pooling.
inline EvaluationReport evaluate(const std::vector<VitalSeries>& truth,
                                 const std::vector<PredictionSeries>& predictions,
                                 const std::vector<EventAnnotation>& annotations,
                                 const NormalRangeParams& range_params,
                                 const TrendParams& trend_params,
                                 bool pooled_window_rmse = false) {
    EvaluationReport report;
    if (!predictions.empty()) report.model_id = predictions.front().model_id;

    double sq_sum = 0.0;
    std::size_t sq_count = 0;
    double range_sum = 0.0, trend_sum = 0.0, trend_dev_sum = 0.0;
    std::size_t range_n = 0, trend_n = 0, trend_dev_n = 0;
    std::vector<const AlignedPair*> pair_ptrs;
    std::vector<AlignedPair> pairs;
    std::vector<std::pair<std::string, std::string>> pair_keys;
    pairs.reserve(truth.size());

    for (const auto& t : truth) {
        const PredictionSeries* match = nullptr;
        for (const auto& p : predictions) {
            if (p.series.patient_id() == t.patient_id() &&
                p.series.signal_name() == t.signal_name()) {
                match = &p;
                break;
            }
        }
        if (!match) {
            ++report.skipped_patients;
            continue;
        }
        AlignedPair pair = align(t, *match);
        if (pair.empty()) {
            ++report.skipped_patients;
            continue;
        }
        for (std::size_t i = 0; i < pair.size(); ++i) {
            const double d = pair.truth_values[i] - pair.predicted_values[i];
            sq_sum += d * d;
        }
        sq_count += pair.size();
        const auto breakdown = aggregate(t, *match, range_params, trend_params);
        range_sum += breakdown.mean_range_cost * static_cast<double>(breakdown.count_range);
        trend_sum += breakdown.mean_trend_cost * static_cast<double>(breakdown.count_trend);
        trend_dev_sum +=
            breakdown.mean_trend_dev_cost * static_cast<double>(breakdown.count_trend_dev);
        range_n += breakdown.count_range;
        trend_n += breakdown.count_trend;
        trend_dev_n += breakdown.count_trend_dev;
        pair_keys.emplace_back(t.patient_id(), t.signal_name());
        pairs.push_back(std::move(pair));
    }
    if (sq_count == 0) throw EmptyAlignment("no aligned points in evaluation set");

    report.overall_rmse = std::sqrt(sq_sum / static_cast<double>(sq_count));
    report.aligned_points = sq_count;
    report.utility.count_range = range_n;
    report.utility.count_trend = trend_n;
    report.utility.count_trend_dev = trend_dev_n;
    if (range_n > 0) report.utility.mean_range_cost = range_sum / static_cast<double>(range_n);
    if (trend_n > 0) report.utility.mean_trend_cost = trend_sum / static_cast<double>(trend_n);
    if (trend_dev_n > 0)
        report.utility.mean_trend_dev_cost = trend_dev_sum / static_cast<double>(trend_dev_n);

    struct TypeAccum {
        double rmse_sum = 0.0;   // per-event mean mode
        double sq_sum = 0.0;     // pooled mode
        std::size_t points = 0;
        std::size_t events = 0;
    };
    std::map<EventType, TypeAccum> accum;
    for (const auto& ann : annotations) {
        const AlignedPair* pair = nullptr;
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            if (pair_keys[i].first == ann.patient_id && pair_keys[i].second == ann.signal_name) {
                pair = &pairs[i];
                break;
            }
        }
        if (!pair) {
            ++report.skipped_windows;
            continue;
        }
        double w_rmse = 0.0;
        std::size_t w_points = 0;
        try {
            w_rmse = window_rmse(*pair, ann);
            for (const auto idx : pair->indices)
                if (idx >= ann.start_index && idx <= ann.end_index) ++w_points;
        } catch (const EmptyWindow&) {
            ++report.skipped_windows;
            continue;
        }
        auto& a = accum[ann.event_type];
        a.rmse_sum += w_rmse;
        a.sq_sum += w_rmse * w_rmse * static_cast<double>(w_points);
        a.points += w_points;
        a.events += 1;
    }
    for (const auto& [type, a] : accum) {
        EventTypeStats stats;
        stats.event_count = a.events;
        if (pooled_window_rmse) {
            stats.mean_window_rmse = std::sqrt(a.sq_sum / static_cast<double>(a.points));
        } else {
            stats.mean_window_rmse = a.rmse_sum / static_cast<double>(a.events);
        }
        report.per_event_type[type] = stats;
    }
    return report;
}

// Ranking criterion: overall RMSE, one of the utility costs, or window
// RMSE for a specific event type.
struct RankCriterion {
    enum class Kind { rmse, range, trend, trend_dev, window_rmse } kind = Kind::rmse;
    EventType event_type = EventType::surge;  // used by window_rmse only

    static RankCriterion by_window_rmse(EventType t) {
        return {Kind::window_rmse, t};
    }
};

inline double criterion_value(const EvaluationReport& report, const RankCriterion& criterion) {
    using Kind = RankCriterion::Kind;
    switch (criterion.kind) {
        case Kind::rmse: return report.overall_rmse;
        case Kind::range:
            if (!report.utility.has_range()) throw MissingMetric("report lacks range cost");
            return report.utility.mean_range_cost;
        case Kind::trend:
            if (!report.utility.has_trend()) throw MissingMetric("report lacks trend cost");
            return report.utility.mean_trend_cost;
        case Kind::trend_dev:
            if (!report.utility.has_trend_dev())
                throw MissingMetric("report lacks trend deviation cost");
            return report.utility.mean_trend_dev_cost;
        case Kind::window_rmse: {
            const auto it = report.per_event_type.find(criterion.event_type);
            if (it == report.per_event_type.end())
                throw MissingMetric(std::string("report lacks window RMSE for ") +
                                    to_string(criterion.event_type));
            return it->second.mean_window_rmse;
        }
    }
    throw std::logic_error("unknown criterion");
}

// Ascending by cost; ties broken by model id so the order is deterministic.
inline std::vector<std::string> rank_models(const std::vector<EvaluationReport>& reports,
                                            const RankCriterion& criterion) {
    if (reports.empty()) throw std::invalid_argument("rank_models needs at least one report");
    std::vector<std::pair<double, std::string>> keyed;
    keyed.reserve(reports.size());
    for (const auto& r : reports) keyed.emplace_back(criterion_value(r, criterion), r.model_id);
    std::sort(keyed.begin(), keyed.end());
    std::vector<std::string> out;
    out.reserve(keyed.size());
    for (auto& [cost, id] : keyed) out.push_back(std::move(id));
    return out;
}

struct PairedComparison {
    std::string model_a, model_b;
    std::vector<double> rmse_a, rmse_b, differences;  // per shared event, a - b
    double t_statistic = 0.0;
    double p_value = 1.0;
    std::size_t n_events = 0;
};

// Window RMSE of two models over a shared annotation set, paired per event.
// Events with no aligned index for either model are dropped from the pairing.
inline PairedComparison compare_on_events(const std::vector<VitalSeries>& truth,
                                          const std::vector<PredictionSeries>& preds_a,
                                          const std::vector<PredictionSeries>& preds_b,
                                          const std::vector<EventAnnotation>& annotations) {
    PairedComparison cmp;
    if (!preds_a.empty()) cmp.model_a = preds_a.front().model_id;
    if (!preds_b.empty()) cmp.model_b = preds_b.front().model_id;
    auto find_pair = [&](const std::vector<PredictionSeries>& preds, const EventAnnotation& ann)
        -> std::optional<AlignedPair> {
        for (const auto& t : truth) {
            if (t.patient_id() != ann.patient_id || t.signal_name() != ann.signal_name) continue;
            for (const auto& p : preds) {
                if (p.series.patient_id() == t.patient_id() &&
                    p.series.signal_name() == t.signal_name())
                    return align(t, p);
            }
        }
        return std::nullopt;
    };
    for (const auto& ann : annotations) {
        const auto pa = find_pair(preds_a, ann);
        const auto pb = find_pair(preds_b, ann);
        if (!pa || !pb || pa->empty() || pb->empty()) continue;
        double ra = 0.0, rb = 0.0;
        try {
            ra = window_rmse(*pa, ann);
            rb = window_rmse(*pb, ann);
        } catch (const EmptyWindow&) {
            continue;
        }
        cmp.rmse_a.push_back(ra);
        cmp.rmse_b.push_back(rb);
        cmp.differences.push_back(ra - rb);
    }
    cmp.n_events = cmp.differences.size();
    const auto t = paired_t_test(cmp.differences);
    cmp.t_statistic = t.t_statistic;
    cmp.p_value = t.p_value;
    return cmp;
}

}  // namespace vitalcast
