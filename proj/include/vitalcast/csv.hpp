#pragma once

// CSV schemas shared by the CLI and the library:
//
//   series       patient_id,signal,step_index,value     (empty value = missing)
//   annotations  patient_id,signal,start_index,end_index,event_type
//   history      epoch,phase,total_loss,mse,range_cost,trend_cost,
//                trend_dev_cost,lambda_range,lambda_trend,lambda_trend_dev
//   reports      model_id,metric,value,count
//
// Values are written with round-trip precision, so export -> ingest is the
// identity and rerunning a command produces byte-identical files. Schema
// violations are reported with file, line, and column.

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "vitalcast/core.hpp"
#include "vitalcast/dataset.hpp"
#include "vitalcast/evaluation.hpp"
#include "vitalcast/format.hpp"
#include "vitalcast/training.hpp"

namespace vitalcast {

struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string schema_msg(const std::string& file, std::size_t line, std::size_t column,
                              const std::string& what) {
    std::ostringstream os;
    os << file << ":" << line << ":" << column << ": " << what;
    return os.str();
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace detail

// ---- series ------------------------------------------------------------

inline void write_series_csv(std::ostream& os, const std::vector<PatientRecord>& records) {
    os << "patient_id,signal,step_index,value\n";
    for (const auto& rec : records) {
        for (const auto& sig : rec.signals) {
            for (const auto& v : sig.values()) {
                os << rec.patient_id << "," << sig.signal_name() << "," << v.index << ",";
                if (v.value) os << detail::format_double(*v.value);
                os << "\n";
            }
        }
    }
}

inline void write_series_csv(const std::string& path, const std::vector<PatientRecord>& records) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    write_series_csv(os, records);
    if (!os) throw std::runtime_error("failed writing: " + path);
}

struct SeriesIngestResult {
    std::vector<PatientRecord> records;  // first-appearance order of patients
    std::vector<std::string> warnings;
};

// Parses and validates a series CSV. Empty value cells become missing
// markers. Out-of-order rows are accepted and sorted with a warning;
// duplicate (patient, signal, index) rows are schema errors.
inline SeriesIngestResult ingest_series_csv(std::istream& is, const std::string& file,
                                            double step_seconds = 1.0) {
    std::string line;
    if (!std::getline(is, line))
        throw SchemaError(detail::schema_msg(file, 1, 1, "missing header"));
    if (auto cols = detail::split_csv_line(line);
        cols != std::vector<std::string>{"patient_id", "signal", "step_index", "value"})
        throw SchemaError(detail::schema_msg(
            file, 1, 1, "expected header 'patient_id,signal,step_index,value'"));

    struct RawSeries {
        std::vector<ObservedValue> values;
        bool sorted = true;
    };
    std::vector<std::string> patient_order;
    std::map<std::string, std::vector<std::string>> signal_order;
    std::map<std::string, std::map<std::string, RawSeries>> table;

    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cols = detail::split_csv_line(line);
        if (cols.size() != 4)
            throw SchemaError(detail::schema_msg(file, line_no, 1, "expected 4 columns, got " +
                                                                       std::to_string(cols.size())));
        const std::string& pid = cols[0];
        const std::string& sig = cols[1];
        if (pid.empty()) throw SchemaError(detail::schema_msg(file, line_no, 1, "empty patient_id"));
        if (sig.empty()) throw SchemaError(detail::schema_msg(file, line_no, 2, "empty signal"));
        std::int64_t index = 0;
        try {
            index = detail::parse_int(cols[2], "step_index");
        } catch (const std::exception& e) {
            throw SchemaError(detail::schema_msg(file, line_no, 3, e.what()));
        }
        if (index < 0)
            throw SchemaError(detail::schema_msg(file, line_no, 3, "step_index must be >= 0"));
        std::optional<double> value;
        if (!cols[3].empty()) {
            try {
                value = detail::parse_double(cols[3], "value");
            } catch (const std::exception& e) {
                throw SchemaError(detail::schema_msg(file, line_no, 4, e.what()));
            }
        }

        auto pit = table.find(pid);
        if (pit == table.end()) {
            patient_order.push_back(pid);
            pit = table.emplace(pid, std::map<std::string, RawSeries>{}).first;
        }
        auto sit = pit->second.find(sig);
        if (sit == pit->second.end()) {
            signal_order[pid].push_back(sig);
            sit = pit->second.emplace(sig, RawSeries{}).first;
        }
        auto& raw = sit->second;
        if (!raw.values.empty() && index <= raw.values.back().index) {
            raw.sorted = false;
        }
        raw.values.push_back({index, value});
    }

    SeriesIngestResult result;
    for (const auto& pid : patient_order) {
        PatientRecord rec;
        rec.patient_id = pid;
        for (const auto& sig : signal_order[pid]) {
            auto& raw = table[pid][sig];
            if (!raw.sorted) {
                std::stable_sort(raw.values.begin(), raw.values.end(),
                                 [](const ObservedValue& a, const ObservedValue& b) {
                                     return a.index < b.index;
                                 });
                result.warnings.push_back(file + ": rows for " + pid + "/" + sig +
                                          " were out of order and have been sorted");
            }
            for (std::size_t i = 1; i < raw.values.size(); ++i) {
                if (raw.values[i].index == raw.values[i - 1].index)
                    throw SchemaError(file + ": duplicate (patient, signal, index) = (" + pid +
                                      ", " + sig + ", " + std::to_string(raw.values[i].index) +
                                      ")");
            }
            rec.signals.emplace_back(pid, sig, step_seconds, std::move(raw.values));
        }
        result.records.push_back(std::move(rec));
    }
    return result;
}

inline SeriesIngestResult ingest_series_csv(const std::string& path, double step_seconds = 1.0) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    return ingest_series_csv(is, path, step_seconds);
}

// ---- annotations ---------------------------------------------------------

inline void write_annotations_csv(std::ostream& os, const std::vector<EventAnnotation>& events) {
    os << "patient_id,signal,start_index,end_index,event_type\n";
    for (const auto& e : events) {
        os << e.patient_id << "," << e.signal_name << "," << e.start_index << "," << e.end_index
           << "," << to_string(e.event_type) << "\n";
    }
}

inline void write_annotations_csv(const std::string& path,
                                  const std::vector<EventAnnotation>& events) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    write_annotations_csv(os, events);
    if (!os) throw std::runtime_error("failed writing: " + path);
}

inline std::vector<EventAnnotation> ingest_annotations_csv(std::istream& is,
                                                           const std::string& file) {
    std::string line;
    if (!std::getline(is, line))
        throw SchemaError(detail::schema_msg(file, 1, 1, "missing header"));
    if (auto cols = detail::split_csv_line(line);
        cols != std::vector<std::string>{"patient_id", "signal", "start_index", "end_index",
                                         "event_type"})
        throw SchemaError(detail::schema_msg(
            file, 1, 1, "expected header 'patient_id,signal,start_index,end_index,event_type'"));

    std::vector<EventAnnotation> out;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cols = detail::split_csv_line(line);
        if (cols.size() != 5)
            throw SchemaError(detail::schema_msg(file, line_no, 1, "expected 5 columns, got " +
                                                                       std::to_string(cols.size())));
        EventAnnotation ann;
        ann.patient_id = cols[0];
        ann.signal_name = cols[1];
        if (ann.patient_id.empty())
            throw SchemaError(detail::schema_msg(file, line_no, 1, "empty patient_id"));
        try {
            ann.start_index = detail::parse_int(cols[2], "start_index");
        } catch (const std::exception& e) {
            throw SchemaError(detail::schema_msg(file, line_no, 3, e.what()));
        }
        try {
            ann.end_index = detail::parse_int(cols[3], "end_index");
        } catch (const std::exception& e) {
            throw SchemaError(detail::schema_msg(file, line_no, 4, e.what()));
        }
        const auto type = event_type_from_string(cols[4]);
        if (!type)
            throw SchemaError(detail::schema_msg(file, line_no, 5,
                                                 "unknown event_type '" + cols[4] + "'"));
        ann.event_type = *type;
        if (ann.start_index > ann.end_index)
            throw SchemaError(
                detail::schema_msg(file, line_no, 3, "start_index must be <= end_index"));
        out.push_back(std::move(ann));
    }
    return out;
}

inline std::vector<EventAnnotation> ingest_annotations_csv(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    return ingest_annotations_csv(is, path);
}

// ---- training history ----------------------------------------------------

inline void write_history_csv(std::ostream& os, const TrainingHistory& history) {
    os << "epoch,phase,total_loss,mse,range_cost,trend_cost,trend_dev_cost,"
          "lambda_range,lambda_trend,lambda_trend_dev\n";
    for (const auto& r : history.epochs) {
        os << r.epoch << "," << r.phase << "," << detail::format_double(r.total_loss) << ","
           << detail::format_double(r.mse) << "," << detail::format_double(r.range) << ","
           << detail::format_double(r.trend) << "," << detail::format_double(r.trend_dev) << ","
           << detail::format_double(r.lambda_range) << "," << detail::format_double(r.lambda_trend)
           << "," << detail::format_double(r.lambda_trend_dev) << "\n";
    }
}

inline void write_history_csv(const std::string& path, const TrainingHistory& history) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    write_history_csv(os, history);
    if (!os) throw std::runtime_error("failed writing: " + path);
}

// ---- evaluation reports ----------------------------------------------------

inline void write_reports_csv(std::ostream& os, const std::vector<EvaluationReport>& reports) {
    os << "model_id,metric,value,count\n";
    for (const auto& r : reports) {
        os << r.model_id << ",rmse," << detail::format_double(r.overall_rmse) << ","
           << r.aligned_points << "\n";
        os << r.model_id << ",range_cost," << detail::format_double(r.utility.mean_range_cost)
           << "," << r.utility.count_range << "\n";
        os << r.model_id << ",trend_cost," << detail::format_double(r.utility.mean_trend_cost)
           << "," << r.utility.count_trend << "\n";
        os << r.model_id << ",trend_dev_cost,"
           << detail::format_double(r.utility.mean_trend_dev_cost) << ","
           << r.utility.count_trend_dev << "\n";
        for (const auto& [type, stats] : r.per_event_type) {
            os << r.model_id << ",window_rmse_" << to_string(type) << ","
               << detail::format_double(stats.mean_window_rmse) << "," << stats.event_count
               << "\n";
        }
        os << r.model_id << ",skipped_windows," << r.skipped_windows << ","
           << r.skipped_windows << "\n";
    }
}

}  // namespace vitalcast
