#pragma once

#include <string>
#include <vector>

#include "rppg/config.hpp"
#include "rppg/optflow.hpp"
#include "rppg/synth.hpp"
#include "rppg/train.hpp"

namespace rppg {

// Subcommand implementations; the CLI binary is a thin argument parser over
// these. Every function is deterministic given its inputs and seed and writes
// only under its output directory.

struct SynthCmdOptions {
    SynthSpec spec;
    uint64_t seed = 1;
    std::string out_dir;
    int64_t count = 1;  // >1 varies the seed per clip into clip_<i>/ subdirs
};
void cmd_synth(const SynthCmdOptions& options);

struct SkinlabelCmdOptions {
    std::string manifest_path;
    std::string out_dir;
    int64_t T = 0, H = 0, W = 0;  // network input geometry
    FlowParams flow;
    bool export_pgm = false;
};
void cmd_skinlabel(const SkinlabelCmdOptions& options);

struct TrainCmdOptions {
    RunConfig config;
    std::vector<std::string> manifests;
    std::string out_dir;
    double early_stop_pearson = -1.0;
    bool verbose = false;
};
// Loads clips, prepares skin labels (from mask files or on the fly through
// the tracker), splits 4:1 train/validation, trains and writes
// checkpoint.bin + loss_curve.csv.
void cmd_train(const TrainCmdOptions& options);

struct InferCmdOptions {
    RunConfig config;
    std::string checkpoint_path;
    std::string manifest_path;
    std::string out_dir;
};
struct InferResult {
    RppgSignal signal;
    double hr_bpm = 0.0;
};
InferResult cmd_infer(const InferCmdOptions& options);

struct BaselineCmdOptions {
    std::string method;  // green | ica | chrom | pos
    std::string clip_path;
    std::string mask_path;  // empty: full-frame mask
    double fps = 0.0;       // overrides nothing if clip comes from a manifest
    std::string out_dir;
};
struct BaselineCmdResult {
    double hr_bpm = 0.0;
};
BaselineCmdResult cmd_baseline(const BaselineCmdOptions& options);

struct EvalCmdOptions {
    std::string pairs_csv;
    std::string out_dir;
    std::vector<double> histogram_edges;  // optional
};
void cmd_eval(const EvalCmdOptions& options);

struct ReportCmdOptions {
    RunConfig config;
    std::string checkpoint_dir;  // expects <variant>.ckpt files
    std::vector<std::string> manifests;
    std::string out_csv;
};
// Evaluates the five trained variants (full, no_cfeature, no_skinmap,
// loss_lr, loss_lr_lf) on the manifest set and writes one metrics row each.
void cmd_report(const ReportCmdOptions& options);

extern const std::vector<std::string> kReportVariants;

// Applies a variant name to a base config (branch/loss switches).
RunConfig variant_config(const RunConfig& base, const std::string& variant);

// Shared helper: manifest -> TrainClip (labels from the mask file when given,
// otherwise tracked from the landmark seeds when present).
TrainClip load_train_clip(const std::string& manifest_path, const RunConfig& config,
                          bool want_labels);

}  // namespace rppg
