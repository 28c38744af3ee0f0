#pragma once

#include <optional>
#include <string>
#include <vector>

namespace rppg {

struct EvalReport {
    double mae = 0.0;
    double rmse = 0.0;
    double sd_e = 0.0;              // population std of |err| about its mean
    std::optional<double> r;        // absent when the truth is constant

    struct ClipError {
        std::string id;
        double predicted = 0.0;
        double truth = 0.0;
        double abs_error = 0.0;
    };
    std::vector<ClipError> per_clip;
};

EvalReport compute_metrics(const std::vector<double>& predicted,
                           const std::vector<double>& truth,
                           const std::vector<std::string>* ids = nullptr);

struct ErrorHistogram {
    std::vector<double> edges;
    std::vector<int64_t> counts;      // per bin; counts.back() is the overflow
    std::vector<double> cumulative;   // fraction of errors below each edge
};

// Edges must be strictly increasing.
ErrorHistogram error_histogram(const EvalReport& report, const std::vector<double>& edges);

void write_report_csv(const std::string& path, const EvalReport& report);
void write_report_summary(const std::string& path, const EvalReport& report);

// "id,predicted,truth" rows; header optional.
struct EvalPairs {
    std::vector<std::string> ids;
    std::vector<double> predicted;
    std::vector<double> truth;
};
EvalPairs read_eval_pairs_csv(const std::string& path);

}  // namespace rppg
