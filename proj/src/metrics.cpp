#include "rppg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "rppg/errors.hpp"

namespace rppg {

EvalReport compute_metrics(const std::vector<double>& predicted,
                           const std::vector<double>& truth,
                           const std::vector<std::string>* ids) {
    const size_t n = predicted.size();
    if (n == 0 || truth.size() != n) {
        throw std::invalid_argument("compute_metrics: inputs must have equal nonzero length");
    }
    if (ids != nullptr && ids->size() != n) {
        throw std::invalid_argument("compute_metrics: id list length mismatch");
    }

    EvalReport report;
    report.per_clip.reserve(n);
    double abs_sum = 0.0, sq_sum = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double err = predicted[i] - truth[i];
        abs_sum += std::abs(err);
        sq_sum += err * err;
        report.per_clip.push_back({ids ? (*ids)[i] : "clip" + std::to_string(i), predicted[i],
                                   truth[i], std::abs(err)});
    }
    report.mae = abs_sum / static_cast<double>(n);
    report.rmse = std::sqrt(sq_sum / static_cast<double>(n));

    double var_err = 0.0;
    for (const auto& e : report.per_clip) {
        var_err += (e.abs_error - report.mae) * (e.abs_error - report.mae);
    }
    report.sd_e = std::sqrt(var_err / static_cast<double>(n));

    // Pearson r between predictions and truth; undefined for constant truth
    double mp = 0.0, mt = 0.0;
    for (size_t i = 0; i < n; ++i) {
        mp += predicted[i];
        mt += truth[i];
    }
    mp /= static_cast<double>(n);
    mt /= static_cast<double>(n);
    double spt = 0.0, spp = 0.0, stt = 0.0;
    for (size_t i = 0; i < n; ++i) {
        spt += (predicted[i] - mp) * (truth[i] - mt);
        spp += (predicted[i] - mp) * (predicted[i] - mp);
        stt += (truth[i] - mt) * (truth[i] - mt);
    }
    if (stt > 0.0 && spp > 0.0) {
        report.r = spt / std::sqrt(spp * stt);
    }
    return report;
}

ErrorHistogram error_histogram(const EvalReport& report, const std::vector<double>& edges) {
    if (edges.empty()) throw std::invalid_argument("error_histogram: no edges");
    for (size_t i = 1; i < edges.size(); ++i) {
        if (edges[i] <= edges[i - 1]) {
            throw std::invalid_argument("error_histogram: edges must be strictly increasing");
        }
    }
    ErrorHistogram hist;
    hist.edges = edges;
    hist.counts.assign(edges.size() + 1, 0);
    for (const auto& e : report.per_clip) {
        const auto it = std::upper_bound(edges.begin(), edges.end(), e.abs_error);
        hist.counts[static_cast<size_t>(it - edges.begin())] += 1;
    }
    hist.cumulative.resize(edges.size());
    const double total = static_cast<double>(report.per_clip.size());
    int64_t below = 0;
    for (size_t i = 0; i < edges.size(); ++i) {
        below += hist.counts[i];
        hist.cumulative[i] = total > 0.0 ? static_cast<double>(below) / total : 0.0;
    }
    return hist;
}

void write_report_csv(const std::string& path, const EvalReport& report) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.precision(17);
    out << "clip,predicted_bpm,truth_bpm,abs_error_bpm\n";
    for (const auto& e : report.per_clip) {
        out << e.id << "," << e.predicted << "," << e.truth << "," << e.abs_error << "\n";
    }
}

void write_report_summary(const std::string& path, const EvalReport& report) {
    nlohmann::json j;
    j["mae_bpm"] = report.mae;
    j["rmse_bpm"] = report.rmse;
    j["sd_e_bpm"] = report.sd_e;
    if (report.r.has_value()) {
        j["r"] = *report.r;
    } else {
        j["r"] = nullptr;
    }
    j["clips"] = report.per_clip.size();
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << j.dump(2) << "\n";
}

EvalPairs read_eval_pairs_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    EvalPairs pairs;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::string id, pred, truth;
        if (!std::getline(ss, id, ',') || !std::getline(ss, pred, ',') ||
            !std::getline(ss, truth, ',')) {
            continue;
        }
        try {
            const double p = std::stod(pred);
            const double t = std::stod(truth);
            pairs.ids.push_back(id);
            pairs.predicted.push_back(p);
            pairs.truth.push_back(t);
        } catch (const std::exception&) {
            continue;  // header
        }
    }
    if (pairs.ids.empty()) throw IoError("eval pairs " + path + ": no usable rows");
    return pairs;
}

}  // namespace rppg
