#pragma once

// Composite utility loss and the warm-start training loop. The loss couples
// the standard squared error with lambda-weighted means of the utility
// costs; training first optimizes MSE alone, then introduces utility terms
// one at a time, escalating each lambda linearly and moving on only after
// the term's loss has stabilized.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "vitalcast/core.hpp"
#include "vitalcast/dataset.hpp"
#include "vitalcast/evaluation.hpp"
#include "vitalcast/models.hpp"
#include "vitalcast/utility.hpp"

namespace vitalcast {

struct NonGradientModel : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DivergedLoss : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct TooFewPatients : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class LossTerm { mse, range, trend, trend_dev };

inline const char* to_string(LossTerm t) {
    switch (t) {
        case LossTerm::mse: return "mse";
        case LossTerm::range: return "range";
        case LossTerm::trend: return "trend";
        case LossTerm::trend_dev: return "trend_dev";
    }
    return "unknown";
}

inline std::optional<LossTerm> loss_term_from_string(const std::string& s) {
    if (s == "mse") return LossTerm::mse;
    if (s == "range") return LossTerm::range;
    if (s == "trend") return LossTerm::trend;
    if (s == "trend_dev") return LossTerm::trend_dev;
    return std::nullopt;
}

// The MSE term is always on; utility terms contribute lambda * mean(U).
struct LossConfig {
    bool include_range = false;
    bool include_trend = false;
    bool include_trend_dev = false;
    double lambda_range = 0.0;
    double lambda_trend = 0.0;
    double lambda_trend_dev = 0.0;
    NormalRangeParams range_params;
    TrendParams trend_params;
};

struct LossBreakdown {
    double total = 0.0;
    double mse = 0.0;
    double range = 0.0;      // raw means, before lambda scaling
    double trend = 0.0;
    double trend_dev = 0.0;
    std::size_t count_mse = 0;
    std::size_t count_range = 0;
    std::size_t count_trend = 0;
    std::size_t count_trend_dev = 0;
    std::size_t trend_skips = 0;  // anchors without full context
};

struct CompositeLoss {
    LossBreakdown breakdown;
    std::vector<std::int64_t> indices;  // aligned prediction indices
    std::vector<double> gradient;       // dL/dy_hat per aligned index
};

// Loss and exact per-prediction (sub)gradient over one aligned pair.
// Trend-term gradients are distributed to the m future prediction points
// through the OLS slope coefficients; the trend-deviation term
// differentiates only through |y_t - y_hat_t|.
inline CompositeLoss composite_loss(const PredictionSeries& predictions, const VitalSeries& truth,
                                    const LossConfig& config) {
    const AlignedPair pair = align(truth, predictions);
    if (pair.empty()) throw EmptyAlignment("composite loss over empty alignment");

    CompositeLoss out;
    out.indices = pair.indices;
    out.gradient.assign(pair.size(), 0.0);
    const double n_mse = static_cast<double>(pair.size());
    out.breakdown.count_mse = pair.size();

    // position of each aligned index for gradient scatter
    std::vector<std::pair<std::int64_t, std::size_t>> index_pos;
    index_pos.reserve(pair.size());
    for (std::size_t i = 0; i < pair.size(); ++i) index_pos.emplace_back(pair.indices[i], i);
    auto position_of = [&](std::int64_t idx) -> std::ptrdiff_t {
        auto it = std::lower_bound(index_pos.begin(), index_pos.end(), idx,
                                   [](const auto& a, std::int64_t b) { return a.first < b; });
        if (it == index_pos.end() || it->first != idx) return -1;
        return static_cast<std::ptrdiff_t>(it->second);
    };

    double sq_sum = 0.0;
    for (std::size_t i = 0; i < pair.size(); ++i) {
        const double diff = pair.predicted_values[i] - pair.truth_values[i];
        sq_sum += diff * diff;
        out.gradient[i] += 2.0 * diff / n_mse;
    }
    out.breakdown.mse = sq_sum / n_mse;
    out.breakdown.total = out.breakdown.mse;

    if (config.include_range) {
        config.range_params.validate();
        double sum = 0.0;
        for (std::size_t i = 0; i < pair.size(); ++i)
            sum += normal_range_cost(pair.truth_values[i], pair.predicted_values[i],
                                     config.range_params);
        out.breakdown.range = sum / n_mse;
        out.breakdown.count_range = pair.size();
        out.breakdown.total += config.lambda_range * out.breakdown.range;
        const double scale = config.lambda_range / n_mse;
        for (std::size_t i = 0; i < pair.size(); ++i)
            out.gradient[i] += scale * range_cost_subgradient(pair.truth_values[i],
                                                              pair.predicted_values[i],
                                                              config.range_params);
    }

    if (config.include_trend || config.include_trend_dev) {
        config.trend_params.validate();
        const int n = config.trend_params.lookback_n;
        const int m = config.trend_params.horizon_m;
        const auto slope_w = predicted_point_slope_weights(n, m);

        struct Anchor {
            std::int64_t t;
            TrendTriple triple;
            bool has_point;  // aligned at t (needed by the deviation term)
            double y, y_hat;
        };
        std::vector<Anchor> anchors;
        for (const auto& tv : truth.values()) {
            Anchor a{tv.index, {}, false, 0.0, 0.0};
            try {
                a.triple = trend_triple(truth, predictions, tv.index, config.trend_params);
            } catch (const InsufficientHistory&) {
                ++out.breakdown.trend_skips;
                continue;
            } catch (const InsufficientHorizon&) {
                ++out.breakdown.trend_skips;
                continue;
            }
            const auto y = truth.value_at(tv.index);
            const auto y_hat = predictions.series.value_at(tv.index);
            if (y && y_hat) {
                a.has_point = true;
                a.y = *y;
                a.y_hat = *y_hat;
            }
            anchors.push_back(std::move(a));
        }

        if (config.include_trend) {
            double sum = 0.0;
            for (const auto& a : anchors) sum += trend_cost(a.triple, config.trend_params);
            out.breakdown.count_trend = anchors.size();
            if (!anchors.empty()) {
                out.breakdown.trend = sum / static_cast<double>(anchors.size());
                out.breakdown.total += config.lambda_trend * out.breakdown.trend;
                const double scale = config.lambda_trend / static_cast<double>(anchors.size());
                for (const auto& a : anchors) {
                    const auto grad = trend_cost_gradient(a.triple, config.trend_params, slope_w);
                    for (int j = 1; j <= m; ++j) {
                        const auto pos = position_of(a.t + j);
                        if (pos >= 0)
                            out.gradient[static_cast<std::size_t>(pos)] +=
                                scale * grad[static_cast<std::size_t>(j - 1)];
                    }
                }
            }
        }

        if (config.include_trend_dev) {
            double sum = 0.0;
            std::size_t count = 0;
            for (const auto& a : anchors) {
                if (!a.has_point) continue;
                sum += trend_deviation_cost(a.triple, a.y, a.y_hat);
                ++count;
            }
            out.breakdown.count_trend_dev = count;
            if (count > 0) {
                out.breakdown.trend_dev = sum / static_cast<double>(count);
                out.breakdown.total += config.lambda_trend_dev * out.breakdown.trend_dev;
                const double scale = config.lambda_trend_dev / static_cast<double>(count);
                for (const auto& a : anchors) {
                    if (!a.has_point) continue;
                    const auto pos = position_of(a.t);
                    if (pos >= 0)
                        out.gradient[static_cast<std::size_t>(pos)] +=
                            scale * trend_dev_cost_subgradient(a.triple, a.y, a.y_hat);
                }
            }
        }
    }
    return out;
}

// One utility phase of the schedule: the term switches on at lambda_start
// and escalates linearly to lambda_end over escalation_epochs, then holds
// until the term's loss stabilizes. With auto_balance the lambda values act
// as multipliers of the coefficient that equates the term's initial mean
// with the MSE term at phase start.
struct PhaseSpec {
    LossTerm term = LossTerm::trend_dev;
    double lambda_start = 0.0;
    double lambda_end = 1.0;
    int escalation_epochs = 1;
    bool auto_balance = false;
};

struct WarmStartSchedule {
    int warm_epochs = 10;
    std::vector<PhaseSpec> phases;
    int stabilization_patience = 10;
    double stabilization_tol = 0.01;
    double learning_rate = 0.01;
    int batch_size = 8;  // patients per minibatch
    int max_epochs = 100;
    std::uint64_t seed = 0;

    void validate() const {
        if (warm_epochs < 0) throw std::invalid_argument("warm_epochs must be >= 0");
        if (stabilization_patience < 1) throw std::invalid_argument("patience must be >= 1");
        if (!(stabilization_tol > 0.0)) throw std::invalid_argument("tolerance must be > 0");
        if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
        if (max_epochs < 0) throw std::invalid_argument("max_epochs must be >= 0");
        for (const auto& ph : phases) {
            if (ph.lambda_start < 0.0 || ph.lambda_end < ph.lambda_start)
                throw std::invalid_argument("phase needs lambda_end >= lambda_start >= 0");
            if (ph.escalation_epochs < 1)
                throw std::invalid_argument("escalation_epochs must be >= 1");
            if (ph.term == LossTerm::mse)
                throw std::invalid_argument("mse is always active, not a phase term");
        }
    }
};

struct EpochRecord {
    int epoch = 0;
    int phase = 0;  // 0 = warm start, k = k-th utility phase
    double total_loss = 0.0;
    double mse = 0.0;
    double range = 0.0;
    double trend = 0.0;
    double trend_dev = 0.0;
    double lambda_range = 0.0;
    double lambda_trend = 0.0;
    double lambda_trend_dev = 0.0;
};

struct TrainingHistory {
    std::vector<EpochRecord> epochs;
};

inline double term_loss(const EpochRecord& rec, LossTerm term) {
    switch (term) {
        case LossTerm::mse: return rec.mse;
        case LossTerm::range: return rec.range;
        case LossTerm::trend: return rec.trend;
        case LossTerm::trend_dev: return rec.trend_dev;
    }
    return 0.0;
}

// A phase is considered stable once consecutive `patience`-epoch moving
// averages of the term's loss differ by less than tol relatively, i.e. the
// averaged loss has stopped moving. Needs patience+1 epochs in the phase
// before it can fire.
inline bool check_stabilization(const TrainingHistory& history, LossTerm term, int patience,
                                double tol) {
    if (history.epochs.empty()) return false;
    const int phase = history.epochs.back().phase;
    std::vector<double> losses;
    for (auto it = history.epochs.rbegin(); it != history.epochs.rend(); ++it) {
        if (it->phase != phase) break;
        losses.push_back(term_loss(*it, term));  // newest first
    }
    const std::size_t p = static_cast<std::size_t>(patience);
    if (losses.size() < p)
        throw std::invalid_argument("check_stabilization needs >= patience epochs in the phase");
    if (losses.size() < p + 1) return false;
    double ma_now = 0.0, ma_prev = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
        ma_now += losses[i];
        ma_prev += losses[i + 1];
    }
    ma_now /= static_cast<double>(p);
    ma_prev /= static_cast<double>(p);
    const double denom = std::max(std::abs(ma_prev), 1e-12);
    return std::abs(ma_now - ma_prev) / denom < tol;
}

namespace detail {

struct PatientTrainingData {
    PatientRecord record;
    const VitalSeries* target = nullptr;
    std::vector<std::int64_t> window_indices;            // indices with a full lag window
    std::vector<std::vector<double>> window_features;
};

inline void set_lambda(LossConfig& cfg, LossTerm term, double lambda) {
    switch (term) {
        case LossTerm::range:
            cfg.include_range = true;
            cfg.lambda_range = lambda;
            break;
        case LossTerm::trend:
            cfg.include_trend = true;
            cfg.lambda_trend = lambda;
            break;
        case LossTerm::trend_dev:
            cfg.include_trend_dev = true;
            cfg.lambda_trend_dev = lambda;
            break;
        case LossTerm::mse: break;
    }
}

inline double term_mean(const LossBreakdown& b, LossTerm term) {
    switch (term) {
        case LossTerm::mse: return b.mse;
        case LossTerm::range: return b.range;
        case LossTerm::trend: return b.trend;
        case LossTerm::trend_dev: return b.trend_dev;
    }
    return 0.0;
}

// Fisher-Yates with a deterministic stream.
inline void shuffle_indices(std::vector<std::size_t>& idx, rng::Stream& stream) {
    for (std::size_t i = idx.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(
            stream.uniform_int(0, static_cast<std::int64_t>(i) - 1));
        std::swap(idx[i - 1], idx[j]);
    }
}

}  // namespace detail

struct TrainResult {
    ModelParams params;
    TrainingHistory history;
};

// Minibatch gradient descent under the warm-start schedule. Minibatches are
// patient subsets: each patient's full prediction series is formed so the
// trend windows couple predictions exactly as the loss defines. Runs are
// bit-reproducible from the schedule seed.
inline TrainResult train(const ModelParams& initial, const std::vector<PatientRecord>& records,
                         const WindowSpec& spec, const WarmStartSchedule& schedule,
                         const LossConfig& base_loss) {
    if (initial.kind != ModelKind::gradient_net)
        throw NonGradientModel("train requires a gradient_net model");
    schedule.validate();
    if (records.empty()) throw std::invalid_argument("empty training set");

    // Precompute per-patient windows once.
    std::vector<detail::PatientTrainingData> data;
    data.reserve(records.size());
    for (const auto& rec : records) {
        detail::PatientTrainingData d;
        d.record = rec;
        const VitalSeries* target = d.record.find_signal(spec.target_signal);
        if (!target) continue;
        for (const auto& tv : target->values()) {
            if (!tv.value) continue;
            const auto w = make_window(d.record, spec, tv.index);
            if (!w) continue;
            d.window_indices.push_back(tv.index);
            d.window_features.push_back(w->features());
        }
        if (d.window_indices.empty()) continue;
        d.target = d.record.find_signal(spec.target_signal);
        data.push_back(std::move(d));
    }
    if (data.empty()) throw std::invalid_argument("no trainable windows in dataset");

    TrainResult result{initial, {}};
    ModelParams& params = result.params;
    TrainingHistory& history = result.history;

    const int total_phases = static_cast<int>(schedule.phases.size());
    int phase = 0;  // 0 = warm start
    int epochs_in_phase = 0;
    // Auto-balance multiplier per phase, fixed when the phase starts.
    std::vector<double> balances(static_cast<std::size_t>(total_phases), 1.0);
    const int epoch_offset = static_cast<int>(params.epochs_trained);

    auto phase_lambda = [&](int phase_index, int epoch_in_phase) {
        const auto& ph = schedule.phases[static_cast<std::size_t>(phase_index - 1)];
        const double span = ph.lambda_end - ph.lambda_start;
        const double frac =
            std::min(1.0, static_cast<double>(epoch_in_phase) /
                              static_cast<double>(ph.escalation_epochs));
        return balances[static_cast<std::size_t>(phase_index - 1)] *
               (ph.lambda_start + span * frac);
    };

    // Mean loss over all patients with the given config (no updates).
    auto full_loss = [&](const LossConfig& cfg) {
        LossBreakdown pooled;
        double sq = 0.0, rg = 0.0, tr = 0.0, td = 0.0, total = 0.0;
        std::size_t n_mse = 0, n_rg = 0, n_tr = 0, n_td = 0;
        for (const auto& d : data) {
            std::vector<ObservedValue> preds;
            preds.reserve(d.window_indices.size());
            for (std::size_t i = 0; i < d.window_indices.size(); ++i)
                preds.push_back({d.window_indices[i],
                                 gradient_net_forward(params, d.window_features[i])});
            PredictionSeries ps{VitalSeries(d.record.patient_id, spec.target_signal,
                                            d.target->step_seconds(), std::move(preds)),
                                params.model_id};
            const auto loss = composite_loss(ps, *d.target, cfg);
            sq += loss.breakdown.mse * static_cast<double>(loss.breakdown.count_mse);
            n_mse += loss.breakdown.count_mse;
            rg += loss.breakdown.range * static_cast<double>(loss.breakdown.count_range);
            n_rg += loss.breakdown.count_range;
            tr += loss.breakdown.trend * static_cast<double>(loss.breakdown.count_trend);
            n_tr += loss.breakdown.count_trend;
            td += loss.breakdown.trend_dev * static_cast<double>(loss.breakdown.count_trend_dev);
            n_td += loss.breakdown.count_trend_dev;
        }
        pooled.mse = n_mse ? sq / static_cast<double>(n_mse) : 0.0;
        pooled.range = n_rg ? rg / static_cast<double>(n_rg) : 0.0;
        pooled.trend = n_tr ? tr / static_cast<double>(n_tr) : 0.0;
        pooled.trend_dev = n_td ? td / static_cast<double>(n_td) : 0.0;
        total = pooled.mse + cfg.lambda_range * pooled.range + cfg.lambda_trend * pooled.trend +
                cfg.lambda_trend_dev * pooled.trend_dev;
        pooled.total = total;
        pooled.count_mse = n_mse;
        pooled.count_range = n_rg;
        pooled.count_trend = n_tr;
        pooled.count_trend_dev = n_td;
        return pooled;
    };

    for (int epoch = 0; epoch < schedule.max_epochs; ++epoch) {
        // Phase bookkeeping: advance out of warm start after warm_epochs,
        // and out of a utility phase once its term has stabilized.
        if (phase == 0 && epochs_in_phase >= schedule.warm_epochs && total_phases > 0) {
            phase = 1;
            epochs_in_phase = 0;
        } else if (phase >= 1 && phase <= total_phases) {
            const auto& ph = schedule.phases[static_cast<std::size_t>(phase - 1)];
            if (epochs_in_phase > ph.escalation_epochs &&
                epochs_in_phase > schedule.stabilization_patience &&
                check_stabilization(history, ph.term, schedule.stabilization_patience,
                                    schedule.stabilization_tol)) {
                if (phase < total_phases) {
                    ++phase;
                    epochs_in_phase = 0;
                } else {
                    break;  // final phase stabilized
                }
            }
        }
        if (phase == 0 && total_phases == 0 && epochs_in_phase >= schedule.warm_epochs) break;

        // Active loss config for this epoch.
        LossConfig cfg = base_loss;
        cfg.include_range = cfg.include_trend = cfg.include_trend_dev = false;
        cfg.lambda_range = cfg.lambda_trend = cfg.lambda_trend_dev = 0.0;
        for (int k = 1; k <= std::min(phase, total_phases); ++k) {
            const auto& ph = schedule.phases[static_cast<std::size_t>(k - 1)];
            if (k < phase) {
                detail::set_lambda(cfg, ph.term, phase_lambda(k, ph.escalation_epochs));
            } else {
                if (epochs_in_phase == 0 && ph.auto_balance) {
                    LossConfig probe = cfg;
                    detail::set_lambda(probe, ph.term, 0.0);
                    const auto b = full_loss(probe);
                    const double u = detail::term_mean(b, ph.term);
                    balances[static_cast<std::size_t>(k - 1)] = b.mse / std::max(u, 1e-12);
                }
                detail::set_lambda(cfg, ph.term, phase_lambda(k, epochs_in_phase));
            }
        }

        // One epoch of patient-minibatch gradient descent.
        std::vector<std::size_t> order(data.size());
        std::iota(order.begin(), order.end(), 0);
        rng::Stream shuffle_stream(schedule.seed, static_cast<std::uint64_t>(epoch_offset + epoch),
                                   rng::kSaltShuffle);
        detail::shuffle_indices(order, shuffle_stream);

        double ep_sq = 0.0, ep_rg = 0.0, ep_tr = 0.0, ep_td = 0.0;
        std::size_t ep_nmse = 0, ep_nrg = 0, ep_ntr = 0, ep_ntd = 0;

        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(schedule.batch_size)) {
            const std::size_t stop =
                std::min(order.size(), start + static_cast<std::size_t>(schedule.batch_size));
            NetGradient grad(params);
            for (std::size_t oi = start; oi < stop; ++oi) {
                const auto& d = data[order[oi]];
                std::vector<ForwardCache> caches(d.window_indices.size());
                std::vector<ObservedValue> preds;
                preds.reserve(d.window_indices.size());
                for (std::size_t i = 0; i < d.window_indices.size(); ++i) {
                    const double y_hat =
                        gradient_net_forward(params, d.window_features[i], &caches[i]);
                    preds.push_back({d.window_indices[i], y_hat});
                }
                PredictionSeries ps{VitalSeries(d.record.patient_id, spec.target_signal,
                                                d.target->step_seconds(), std::move(preds)),
                                    params.model_id};
                const auto loss = composite_loss(ps, *d.target, cfg);
                for (std::size_t i = 0; i < loss.gradient.size(); ++i)
                    gradient_net_backward(params, caches[i], loss.gradient[i], grad);

                ep_sq += loss.breakdown.mse * static_cast<double>(loss.breakdown.count_mse);
                ep_nmse += loss.breakdown.count_mse;
                ep_rg += loss.breakdown.range * static_cast<double>(loss.breakdown.count_range);
                ep_nrg += loss.breakdown.count_range;
                ep_tr += loss.breakdown.trend * static_cast<double>(loss.breakdown.count_trend);
                ep_ntr += loss.breakdown.count_trend;
                ep_td += loss.breakdown.trend_dev *
                         static_cast<double>(loss.breakdown.count_trend_dev);
                ep_ntd += loss.breakdown.count_trend_dev;
            }
            grad.scale(1.0 / static_cast<double>(stop - start));
            apply_gradient_step(params, grad, schedule.learning_rate);
        }

        EpochRecord rec;
        rec.epoch = epoch_offset + epoch;
        rec.phase = phase;
        rec.mse = ep_nmse ? ep_sq / static_cast<double>(ep_nmse) : 0.0;
        rec.range = ep_nrg ? ep_rg / static_cast<double>(ep_nrg) : 0.0;
        rec.trend = ep_ntr ? ep_tr / static_cast<double>(ep_ntr) : 0.0;
        rec.trend_dev = ep_ntd ? ep_td / static_cast<double>(ep_ntd) : 0.0;
        rec.lambda_range = cfg.lambda_range;
        rec.lambda_trend = cfg.lambda_trend;
        rec.lambda_trend_dev = cfg.lambda_trend_dev;
        rec.total_loss = rec.mse + cfg.lambda_range * rec.range + cfg.lambda_trend * rec.trend +
                         cfg.lambda_trend_dev * rec.trend_dev;
        history.epochs.push_back(rec);
        params.epochs_trained = epoch_offset + epoch + 1;

        if (!std::isfinite(rec.total_loss))
            throw DivergedLoss("loss became non-finite at epoch " + std::to_string(rec.epoch));

        ++epochs_in_phase;
    }
    return result;
}

struct CrossvalResult {
    std::vector<EvaluationReport> fold_reports;
    std::vector<std::vector<std::size_t>> fold_test_patients;  // record positions per fold
    double mean_rmse = 0.0, std_rmse = 0.0;
    double mean_range = 0.0, mean_trend = 0.0, mean_trend_dev = 0.0;
};

// Deterministic patient-level fold assignment from the seed.
inline std::vector<std::vector<std::size_t>> make_folds(std::size_t n_patients, int k_folds,
                                                        std::uint64_t seed) {
    if (k_folds < 2) throw std::invalid_argument("k_folds must be >= 2");
    if (n_patients < static_cast<std::size_t>(k_folds))
        throw TooFewPatients("fewer patients than folds");
    std::vector<std::size_t> order(n_patients);
    std::iota(order.begin(), order.end(), 0);
    rng::Stream stream(seed, 0, rng::kSaltFolds);
    detail::shuffle_indices(order, stream);
    std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k_folds));
    for (std::size_t i = 0; i < order.size(); ++i)
        folds[i % static_cast<std::size_t>(k_folds)].push_back(order[i]);
    for (auto& f : folds) std::sort(f.begin(), f.end());
    return folds;
}

// Fits the model kind on each training split and evaluates on the held-out
// patients. gradient_net goes through train(); closed-form kinds are fitted
// directly; persistence needs no fitting.
inline CrossvalResult crossval(const std::vector<PatientRecord>& records, ModelKind kind,
                               const WindowSpec& spec, const WarmStartSchedule& schedule,
                               const LossConfig& loss_config, int k_folds,
                               const std::vector<EventAnnotation>& annotations = {},
                               std::size_t hidden_width = 16) {
    const auto folds = make_folds(records.size(), k_folds, schedule.seed);
    CrossvalResult result;
    std::vector<double> rmses;

    for (std::size_t f = 0; f < folds.size(); ++f) {
        std::vector<char> in_test(records.size(), 0);
        for (auto i : folds[f]) in_test[i] = 1;
        std::vector<PatientRecord> train_recs, test_recs;
        for (std::size_t i = 0; i < records.size(); ++i)
            (in_test[i] ? test_recs : train_recs).push_back(records[i]);

        ModelParams params;
        if (kind == ModelKind::gradient_net) {
            const auto ds = build_window_dataset(train_recs, spec);
            params = init_gradient_net(ds.feature_dim, hidden_width,
                                       schedule.seed + f, "gradient_net");
            fit_standardization(params, ds);
            params = train(params, train_recs, spec, schedule, loss_config).params;
        } else if (kind == ModelKind::linear_ar || kind == ModelKind::ridge_ar) {
            const auto ds = build_window_dataset(train_recs, spec);
            const double ridge = kind == ModelKind::ridge_ar ? 1.0 : 0.0;
            params = fit_linear_ar(ds.features, ds.targets, ridge, to_string(kind));
        } else {
            params.kind = ModelKind::persistence;
            params.model_id = "persistence";
        }

        std::vector<VitalSeries> truths;
        std::vector<PredictionSeries> preds;
        for (const auto& rec : test_recs) {
            const VitalSeries* target = rec.find_signal(spec.target_signal);
            if (!target) continue;
            truths.push_back(*target);
            preds.push_back(predict_series(params, rec, spec));
        }
        result.fold_reports.push_back(evaluate(truths, preds, annotations,
                                               loss_config.range_params,
                                               loss_config.trend_params));
        result.fold_test_patients.push_back(folds[f]);
        rmses.push_back(result.fold_reports.back().overall_rmse);
    }

    const double n = static_cast<double>(rmses.size());
    for (double r : rmses) result.mean_rmse += r;
    result.mean_rmse /= n;
    double var = 0.0;
    for (double r : rmses) var += (r - result.mean_rmse) * (r - result.mean_rmse);
    result.std_rmse = std::sqrt(var / n);
    for (const auto& rep : result.fold_reports) {
        result.mean_range += rep.utility.mean_range_cost;
        result.mean_trend += rep.utility.mean_trend_cost;
        result.mean_trend_dev += rep.utility.mean_trend_dev_cost;
    }
    result.mean_range /= n;
    result.mean_trend /= n;
    result.mean_trend_dev /= n;
    return result;
}

}  // namespace vitalcast
