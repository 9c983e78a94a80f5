#pragma once

// Implementations of the CLI commands. They live in the library so tests
// can drive them in-process; tools/main.cpp only parses arguments.
//
// Exit codes: 0 ok, 2 config error, 3 training divergence, 4 data schema
// error, 1 anything else.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "vitalcast/config.hpp"
#include "vitalcast/csv.hpp"
#include "vitalcast/dataset.hpp"
#include "vitalcast/evaluation.hpp"
#include "vitalcast/models.hpp"
#include "vitalcast/parallel.hpp"
#include "vitalcast/simulator.hpp"
#include "vitalcast/training.hpp"

namespace vitalcast::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitDiverged = 3;
inline constexpr int kExitSchema = 4;

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;  // overrides the config seed
    int threads = 1;
};

namespace detail {

inline std::string read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os << content;
    if (!os) throw std::runtime_error("failed writing: " + path);
}

inline void write_effective_config(const std::string& out_dir, const nlohmann::json& j) {
    write_file(out_dir + "/effective_config.json", j.dump(2) + "\n");
}

inline void ensure_out_dir(const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
}

}  // namespace detail

// ---- simulate ---------------------------------------------------------------

// Writes series.csv, events.csv (injected events plus detected range events
// on the target signal), summary.txt, and the effective config.
inline int cmd_simulate(const CommonArgs& args) {
    try {
        const auto doc = parse_config_text(detail::read_file(args.config_path), args.config_path);
        vitalcast::detail::ConfigReader top(doc, "");
        SimConfig cfg;
        if (const auto* sim = top.object("sim")) {
            cfg = sim_config_from_json(*sim);
        } else {
            cfg.validate();
        }
        const bool detect_range = top.boolean("detect_range_events", true);
        top.finish();
        if (args.seed) cfg.seed = *args.seed;

        detail::ensure_out_dir(args.out_dir);
        nlohmann::json effective;
        effective["sim"] = sim_config_to_json(cfg);
        effective["detect_range_events"] = detect_range;
        detail::write_effective_config(args.out_dir, effective);

        const auto patients = generate_dataset(cfg, args.threads);
        write_series_csv(args.out_dir + "/series.csv", to_records(patients));

        std::vector<EventAnnotation> annotations;
        for (const auto& p : patients) {
            annotations.insert(annotations.end(), p.event_log.begin(), p.event_log.end());
            if (detect_range) {
                const auto ranges = detect_range_events(p.s3, cfg.events.range_sigma);
                annotations.insert(annotations.end(), ranges.begin(), ranges.end());
            }
        }
        write_annotations_csv(args.out_dir + "/events.csv", annotations);

        const auto summary = summarize_dataset(patients, cfg.events.range_sigma);
        std::ostringstream os;
        os << "patients: " << summary.n_patients << "\n";
        os << "steps_per_patient: " << cfg.n_steps << "\n";
        os << "injected_events_total: " << summary.injected_total << "\n";
        os << "injected_events_per_patient: "
           << vitalcast::detail::format_double(summary.mean_injected_per_patient) << "\n";
        for (const auto& [type, count] : summary.injected_counts)
            os << "injected_" << to_string(type) << ": " << count << "\n";
        os << "range_events_total: " << summary.range_event_count << "\n";
        os << "range_events_per_patient: "
           << vitalcast::detail::format_double(summary.mean_range_per_patient) << "\n";
        detail::write_file(args.out_dir + "/summary.txt", os.str());
        return kExitOk;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
}

// ---- train --------------------------------------------------------------------

struct TrainArgs : CommonArgs {
    std::string data_path;
    std::optional<std::string> resume_model;  // continue from a serialized model
};

namespace detail {

struct TrainConfig {
    ModelKind kind = ModelKind::gradient_net;
    std::string model_id;
    std::size_t hidden_width = 16;
    double ridge_strength = 1.0;
    WindowSpec window;
    LossConfig loss;
    WarmStartSchedule schedule;
};

inline TrainConfig parse_train_config(const nlohmann::json& doc) {
    vitalcast::detail::ConfigReader top(doc, "");
    TrainConfig cfg;
    if (const auto* model = top.object("model")) {
        vitalcast::detail::ConfigReader rm(*model, "model");
        const std::string kind = rm.text("kind", "gradient_net");
        const auto k = model_kind_from_string(kind);
        if (!k) throw ConfigError("model.kind must be one of persistence, linear_ar, ridge_ar, "
                                  "gradient_net");
        cfg.kind = *k;
        cfg.model_id = rm.text("model_id", kind);
        cfg.hidden_width = static_cast<std::size_t>(rm.integer("hidden_width", 16));
        cfg.ridge_strength = rm.number("ridge_strength", 1.0);
        rm.finish();
    } else {
        cfg.model_id = to_string(cfg.kind);
    }
    if (const auto* window = top.object("window"))
        cfg.window = window_spec_from_json(*window, "window");
    if (const auto* loss = top.object("loss")) {
        vitalcast::detail::ConfigReader rl(*loss, "loss");
        if (const auto* rp = rl.object("range_params"))
            cfg.loss.range_params = range_params_from_json(*rp, "loss.range_params");
        if (const auto* tp = rl.object("trend_params"))
            cfg.loss.trend_params = trend_params_from_json(*tp, "loss.trend_params");
        rl.finish();
    }
    if (const auto* schedule = top.object("schedule"))
        cfg.schedule = schedule_from_json(*schedule, "schedule");
    top.finish();
    return cfg;
}

inline nlohmann::json train_config_to_json(const TrainConfig& cfg) {
    nlohmann::json j;
    j["model"] = {{"kind", to_string(cfg.kind)},
                  {"model_id", cfg.model_id},
                  {"hidden_width", cfg.hidden_width},
                  {"ridge_strength", cfg.ridge_strength}};
    j["window"] = window_spec_to_json(cfg.window);
    j["loss"] = {{"range_params", range_params_to_json(cfg.loss.range_params)},
                 {"trend_params", trend_params_to_json(cfg.loss.trend_params)}};
    j["schedule"] = schedule_to_json(cfg.schedule);
    return j;
}

}  // namespace detail

// Fits or trains the configured model kind on a series CSV, then writes
// model.kv, history.csv, and the effective config. gradient_net uses the
// warm-start schedule; closed-form kinds are fitted directly and record a
// single-epoch history with their training MSE.
inline int cmd_train(const TrainArgs& args) {
    try {
        const auto doc = parse_config_text(detail::read_file(args.config_path), args.config_path);
        auto cfg = detail::parse_train_config(doc);
        if (args.seed) cfg.schedule.seed = *args.seed;

        detail::ensure_out_dir(args.out_dir);
        detail::write_effective_config(args.out_dir, detail::train_config_to_json(cfg));

        const auto ingest = ingest_series_csv(args.data_path);
        for (const auto& w : ingest.warnings) std::cerr << "warning: " << w << "\n";
        const auto& records = ingest.records;

        ModelParams params;
        TrainingHistory history;
        const auto ds = build_window_dataset(records, cfg.window);
        if (ds.size() == 0) throw SchemaError(args.data_path + ": no usable training windows");

        if (cfg.kind == ModelKind::gradient_net) {
            if (args.resume_model) {
                params = load_model(*args.resume_model);
                if (params.kind != ModelKind::gradient_net)
                    throw ConfigError("resume model is not a gradient_net");
            } else {
                params = init_gradient_net(ds.feature_dim, cfg.hidden_width, cfg.schedule.seed,
                                           cfg.model_id);
                fit_standardization(params, ds);
            }
            auto result = train(params, records, cfg.window, cfg.schedule, cfg.loss);
            params = std::move(result.params);
            history = std::move(result.history);
        } else {
            if (cfg.kind == ModelKind::persistence) {
                params.kind = ModelKind::persistence;
                params.model_id = cfg.model_id;
            } else {
                const double ridge =
                    cfg.kind == ModelKind::ridge_ar ? cfg.ridge_strength : 0.0;
                params = fit_linear_ar(ds.features, ds.targets, ridge, cfg.model_id);
            }
            double sq = 0.0;
            for (std::size_t i = 0; i < ds.size(); ++i) {
                double pred;
                if (cfg.kind == ModelKind::persistence) {
                    pred = ds.features[i][static_cast<std::size_t>(cfg.window.lags) - 1];
                } else {
                    pred = linear_predict(params, ds.features[i]);
                }
                const double d = pred - ds.targets[i];
                sq += d * d;
            }
            EpochRecord rec;
            rec.epoch = 0;
            rec.mse = sq / static_cast<double>(ds.size());
            rec.total_loss = rec.mse;
            history.epochs.push_back(rec);
            params.epochs_trained = 1;
        }

        save_model(params, args.out_dir + "/model.kv");
        write_history_csv(args.out_dir + "/history.csv", history);
        return kExitOk;
    } catch (const DivergedLoss& e) {
        std::cerr << "training diverged: " << e.what() << "\n";
        return kExitDiverged;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const SchemaError& e) {
        std::cerr << "schema error: " << e.what() << "\n";
        return kExitSchema;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
}

// ---- evaluate -------------------------------------------------------------------

struct EvaluateArgs : CommonArgs {
    std::string data_path;
    std::vector<std::string> model_paths;
    std::optional<std::string> annotations_path;
};

// Evaluates every model file on the dataset; writes reports.csv plus
// grouped-bar plot data, and (with annotations and exactly two models) a
// paired comparison with difference-histogram data.
inline int cmd_evaluate(const EvaluateArgs& args) {
    try {
        const auto doc = parse_config_text(detail::read_file(args.config_path), args.config_path);
        vitalcast::detail::ConfigReader top(doc, "");
        WindowSpec window;
        NormalRangeParams range_params;
        TrendParams trend_params;
        bool pooled = false;
        if (const auto* w = top.object("window")) window = window_spec_from_json(*w, "window");
        if (const auto* metrics = top.object("metrics")) {
            vitalcast::detail::ConfigReader rm(*metrics, "metrics");
            if (const auto* rp = rm.object("range_params"))
                range_params = range_params_from_json(*rp, "metrics.range_params");
            if (const auto* tp = rm.object("trend_params"))
                trend_params = trend_params_from_json(*tp, "metrics.trend_params");
            pooled = rm.boolean("pooled_window_rmse", false);
            rm.finish();
        }
        const auto histogram_bins = static_cast<int>(top.integer("histogram_bins", 10));
        const double step_seconds = top.number("step_seconds", 1.0);
        top.finish();
        if (histogram_bins < 1) throw ConfigError("histogram_bins must be >= 1");
        if (args.model_paths.empty()) throw ConfigError("evaluate needs at least one --model");

        detail::ensure_out_dir(args.out_dir);
        nlohmann::json effective;
        effective["window"] = window_spec_to_json(window);
        effective["metrics"] = {{"range_params", range_params_to_json(range_params)},
                                {"trend_params", trend_params_to_json(trend_params)},
                                {"pooled_window_rmse", pooled}};
        effective["histogram_bins"] = histogram_bins;
        effective["step_seconds"] = step_seconds;
        detail::write_effective_config(args.out_dir, effective);

        const auto ingest = ingest_series_csv(args.data_path, step_seconds);
        for (const auto& w : ingest.warnings) std::cerr << "warning: " << w << "\n";
        const auto& records = ingest.records;

        std::vector<EventAnnotation> annotations;
        if (args.annotations_path)
            annotations = ingest_annotations_csv(*args.annotations_path);

        std::vector<VitalSeries> truths;
        for (const auto& rec : records) {
            const auto* target = rec.find_signal(window.target_signal);
            if (target) truths.push_back(*target);
        }
        if (truths.empty())
            throw SchemaError(args.data_path + ": no patient carries the target signal '" +
                              window.target_signal + "'");

        std::vector<EvaluationReport> reports;
        std::vector<std::vector<PredictionSeries>> all_predictions;
        for (const auto& model_path : args.model_paths) {
            const auto params = load_model(model_path);
            std::vector<PredictionSeries> preds(records.size());
            std::vector<char> ok(records.size(), 0);
            parallel_for_index(records.size(), args.threads, [&](std::size_t i) {
                if (!records[i].find_signal(window.target_signal)) return;
                preds[i] = predict_series(params, records[i], window);
                ok[i] = 1;
            });
            std::vector<PredictionSeries> kept;
            for (std::size_t i = 0; i < preds.size(); ++i)
                if (ok[i]) kept.push_back(std::move(preds[i]));
            reports.push_back(
                evaluate(truths, kept, annotations, range_params, trend_params, pooled));
            all_predictions.push_back(std::move(kept));
        }

        {
            std::ofstream os(args.out_dir + "/reports.csv", std::ios::binary);
            write_reports_csv(os, reports);
        }
        {
            std::ofstream os(args.out_dir + "/plot_event_rmse.csv", std::ios::binary);
            os << "model_id,event_type,window_rmse,event_count\n";
            for (const auto& r : reports)
                for (const auto& [type, stats] : r.per_event_type)
                    os << r.model_id << "," << to_string(type) << ","
                       << vitalcast::detail::format_double(stats.mean_window_rmse) << ","
                       << stats.event_count << "\n";
        }
        {
            std::ofstream os(args.out_dir + "/plot_utility.csv", std::ios::binary);
            os << "model_id,metric,value\n";
            for (const auto& r : reports) {
                os << r.model_id << ",rmse,"
                   << vitalcast::detail::format_double(r.overall_rmse) << "\n";
                os << r.model_id << ",range_cost,"
                   << vitalcast::detail::format_double(r.utility.mean_range_cost) << "\n";
                os << r.model_id << ",trend_cost,"
                   << vitalcast::detail::format_double(r.utility.mean_trend_cost) << "\n";
                os << r.model_id << ",trend_dev_cost,"
                   << vitalcast::detail::format_double(r.utility.mean_trend_dev_cost) << "\n";
            }
        }

        if (args.annotations_path && args.model_paths.size() == 2) {
            try {
                const auto cmp = compare_on_events(truths, all_predictions[0], all_predictions[1],
                                                   annotations);
                std::ofstream os(args.out_dir + "/comparison.csv", std::ios::binary);
                os << "model_a,model_b,n_events,t_statistic,p_value\n";
                os << cmp.model_a << "," << cmp.model_b << "," << cmp.n_events << ","
                   << vitalcast::detail::format_double(cmp.t_statistic) << ","
                   << vitalcast::detail::format_double(cmp.p_value) << "\n";

                double lo = cmp.differences.front(), hi = lo;
                for (double d : cmp.differences) {
                    lo = std::min(lo, d);
                    hi = std::max(hi, d);
                }
                if (hi == lo) hi = lo + 1.0;
                std::vector<std::size_t> bins(static_cast<std::size_t>(histogram_bins), 0);
                for (double d : cmp.differences) {
                    auto b = static_cast<std::size_t>((d - lo) / (hi - lo) *
                                                      static_cast<double>(histogram_bins));
                    if (b >= bins.size()) b = bins.size() - 1;
                    ++bins[b];
                }
                std::ofstream hs(args.out_dir + "/plot_rmse_diff_hist.csv", std::ios::binary);
                hs << "bin_low,bin_high,count\n";
                const double width = (hi - lo) / static_cast<double>(histogram_bins);
                for (std::size_t b = 0; b < bins.size(); ++b) {
                    hs << vitalcast::detail::format_double(lo + width * static_cast<double>(b))
                       << ","
                       << vitalcast::detail::format_double(lo + width * static_cast<double>(b + 1))
                       << "," << bins[b] << "\n";
                }
            } catch (const TooFewSamples& e) {
                std::cerr << "warning: paired comparison skipped: " << e.what() << "\n";
            } catch (const ZeroVariance& e) {
                std::cerr << "warning: paired comparison skipped: " << e.what() << "\n";
            }
        }
        return kExitOk;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const SchemaError& e) {
        std::cerr << "schema error: " << e.what() << "\n";
        return kExitSchema;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitError;
    }
}

}  // namespace vitalcast::cli
