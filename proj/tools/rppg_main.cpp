#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rppg/commands.hpp"
#include "rppg/errors.hpp"

using namespace rppg;

int main(int argc, char** argv) {
    CLI::App app{"rPPG signal and heart-rate estimation from face video"};
    app.require_subcommand(1);

    std::string config_path;
    uint64_t seed_flag = 0;
    bool seed_given = false;
    app.add_option("--config", config_path, "run config file (key = value)");
    app.add_option("--seed", seed_flag, "override the config seed")
        ->each([&](const std::string&) { seed_given = true; });

    auto load_config = [&]() {
        RunConfig cfg;
        if (!config_path.empty()) cfg = read_run_config(config_path);
        if (seed_given) cfg.seed = seed_flag;
        return cfg;
    };

    // synth
    SynthCmdOptions synth;
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic pulsatile clip");
    synth_cmd->add_option("--hr", synth.spec.hr_bpm, "heart rate, bpm");
    synth_cmd->add_option("--fps", synth.spec.fps, "frame rate");
    synth_cmd->add_option("--frames", synth.spec.frames, "clip length, frames");
    synth_cmd->add_option("--height", synth.spec.height, "frame height");
    synth_cmd->add_option("--width", synth.spec.width, "frame width");
    synth_cmd->add_option("--noise", synth.spec.noise_std, "additive noise std");
    synth_cmd->add_option("--drift", synth.spec.drift_px_per_frame, "face drift px/frame");
    synth_cmd->add_option("--flicker", synth.spec.flicker_amp, "global flicker amplitude");
    synth_cmd->add_option("--flicker-hz", synth.spec.flicker_hz, "global flicker frequency");
    synth_cmd->add_option("--bg-flicker", synth.spec.bg_flicker_amp,
                          "background flicker amplitude");
    synth_cmd->add_option("--bg-flicker-hz", synth.spec.bg_flicker_hz,
                          "background flicker frequency");
    synth_cmd->add_option("--pulse-scale", synth.spec.pulse_scale, "pulse amplitude multiplier");
    synth_cmd->add_option("--count", synth.count, "number of clips");
    synth_cmd->add_option("--out", synth.out_dir, "output directory")->required();

    // skinlabel
    SkinlabelCmdOptions skinlabel;
    auto* skin_cmd = app.add_subcommand("skinlabel", "track landmarks and rasterize skin masks");
    skin_cmd->add_option("--manifest", skinlabel.manifest_path, "clip manifest")->required();
    skin_cmd->add_option("--out", skinlabel.out_dir, "output directory")->required();
    skin_cmd->add_flag("--pgm", skinlabel.export_pgm, "also export PGM frames");

    // train
    TrainCmdOptions train;
    auto* train_cmd = app.add_subcommand("train", "train the network on manifest clips");
    train_cmd->add_option("--manifest", train.manifests, "clip manifest (repeatable)")
        ->required();
    train_cmd->add_option("--out", train.out_dir, "output directory")->required();
    train_cmd->add_option("--early-stop", train.early_stop_pearson,
                          "stop when the train L_r drops below");
    train_cmd->add_flag("--verbose", train.verbose, "per-epoch progress lines");

    // infer
    InferCmdOptions infer;
    auto* infer_cmd = app.add_subcommand("infer", "recover the signal and heart rate");
    infer_cmd->add_option("--checkpoint", infer.checkpoint_path, "trained checkpoint");
    infer_cmd->add_option("--manifest", infer.manifest_path, "clip manifest")->required();
    infer_cmd->add_option("--out", infer.out_dir, "output directory")->required();

    // baseline
    BaselineCmdOptions baseline;
    auto* base_cmd = app.add_subcommand("baseline", "classical estimators");
    base_cmd->add_option("--method", baseline.method, "green | ica | chrom | pos")->required();
    base_cmd->add_option("--clip", baseline.clip_path, "raw clip container")->required();
    base_cmd->add_option("--mask", baseline.mask_path, "mask container (default: full frame)");
    base_cmd->add_option("--fps", baseline.fps, "frame rate")->required();
    base_cmd->add_option("--out", baseline.out_dir, "output directory");

    // eval
    EvalCmdOptions eval_opts;
    auto* eval_cmd = app.add_subcommand("eval", "metrics from (id,predicted,truth) pairs");
    eval_cmd->add_option("--pairs", eval_opts.pairs_csv, "pairs CSV")->required();
    eval_cmd->add_option("--out", eval_opts.out_dir, "output directory")->required();
    eval_cmd->add_option("--edges", eval_opts.histogram_edges,
                         "histogram edges in bpm (repeatable)");

    // report
    ReportCmdOptions report;
    auto* report_cmd = app.add_subcommand("report", "ablation table over trained variants");
    report_cmd->add_option("--checkpoints", report.checkpoint_dir,
                           "directory with <variant>.ckpt files")
        ->required();
    report_cmd->add_option("--manifest", report.manifests, "evaluation manifest (repeatable)")
        ->required();
    report_cmd->add_option("--out", report.out_csv, "output CSV path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth_cmd->parsed()) {
            synth.seed = seed_given ? seed_flag : 1;
            cmd_synth(synth);
        } else if (skin_cmd->parsed()) {
            const RunConfig cfg = load_config();
            skinlabel.T = cfg.network.T;
            skinlabel.H = cfg.network.H;
            skinlabel.W = cfg.network.W;
            cmd_skinlabel(skinlabel);
        } else if (train_cmd->parsed()) {
            train.config = load_config();
            cmd_train(train);
        } else if (infer_cmd->parsed()) {
            infer.config = load_config();
            const InferResult result = cmd_infer(infer);
            std::printf("hr: %.3f bpm\n", result.hr_bpm);
        } else if (base_cmd->parsed()) {
            cmd_baseline(baseline);
        } else if (eval_cmd->parsed()) {
            cmd_eval(eval_opts);
        } else if (report_cmd->parsed()) {
            report.config = load_config();
            cmd_report(report);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s: %s\n", error_category(e), e.what());
        return 1;
    }
    return 0;
}
