#include "rppg/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "rppg/baselines.hpp"
#include "rppg/checkpoint.hpp"
#include "rppg/errors.hpp"
#include "rppg/metrics.hpp"
#include "rppg/skinlabel.hpp"

namespace fs = std::filesystem;

namespace rppg {

const std::vector<std::string> kReportVariants = {"full", "no_cfeature", "no_skinmap", "loss_lr",
                                                  "loss_lr_lf"};

RunConfig variant_config(const RunConfig& base, const std::string& variant) {
    RunConfig cfg = base;
    cfg.network.use_cfeature = true;
    cfg.network.use_skinmap = true;
    cfg.use_frequency_loss = true;
    cfg.use_skin_loss = true;
    if (variant == "full") {
        return cfg;
    }
    if (variant == "no_cfeature") {
        cfg.network.use_cfeature = false;
        return cfg;
    }
    if (variant == "no_skinmap") {
        cfg.network.use_skinmap = false;
        cfg.use_skin_loss = false;
        return cfg;
    }
    if (variant == "loss_lr") {
        cfg.use_frequency_loss = false;
        cfg.use_skin_loss = false;
        return cfg;
    }
    if (variant == "loss_lr_lf") {
        cfg.use_skin_loss = false;
        return cfg;
    }
    throw std::invalid_argument("unknown variant: " + variant);
}

void cmd_synth(const SynthCmdOptions& options) {
    if (options.out_dir.empty()) throw std::invalid_argument("synth: missing output directory");
    if (options.count == 1) {
        write_synthetic_dataset(options.spec, options.seed, options.out_dir);
        return;
    }
    for (int64_t i = 0; i < options.count; ++i) {
        const fs::path dir = fs::path(options.out_dir) / ("clip_" + std::to_string(i));
        write_synthetic_dataset(options.spec, options.seed + static_cast<uint64_t>(i),
                                dir.string());
    }
}

void cmd_skinlabel(const SkinlabelCmdOptions& options) {
    const ClipManifest manifest = read_manifest(options.manifest_path);
    if (manifest.landmark_path.empty()) {
        throw ConfigError("skinlabel: manifest has no landmark seed file");
    }
    const LoadedClip loaded = load_clip(manifest, options.T, options.H, options.W);
    const std::vector<Image> gray = clip_to_gray(loaded.clip);

    const LandmarkTrack track = track_landmarks(gray, loaded.seeds, options.flow);
    const Tensor masks = rasterize_skin(track, options.H, options.W);

    fs::create_directories(options.out_dir);
    const fs::path dir(options.out_dir);
    save_masks((dir / "masks.msk").string(), masks);
    write_track_csv((dir / "track.csv").string(), track);
    if (options.export_pgm) {
        fs::create_directories(dir / "pgm");
        export_masks_pgm((dir / "pgm").string() + "/", masks);
    }
}

TrainClip load_train_clip(const std::string& manifest_path, const RunConfig& config,
                          bool want_labels) {
    const ClipManifest manifest = read_manifest(manifest_path);
    const NetworkConfig& net = config.network;
    const LoadedClip loaded = load_clip(manifest, net.T, net.H, net.W);

    TrainClip clip;
    clip.id = fs::path(manifest_path).parent_path().filename().string();
    if (clip.id.empty()) clip.id = manifest_path;
    clip.clip = loaded.clip.frames;
    clip.ppg = loaded.ppg;
    clip.hr_bpm = loaded.hr_bpm;
    if (clip.ppg.samples.empty()) {
        throw ConfigError("train: manifest " + manifest_path + " has no ppg ground truth");
    }

    if (want_labels) {
        Tensor masks = loaded.masks;
        if (masks.empty() && !loaded.seeds.empty()) {
            const std::vector<Image> gray = clip_to_gray(loaded.clip);
            const LandmarkTrack track = track_landmarks(gray, loaded.seeds, FlowParams{});
            masks = rasterize_skin(track, net.H, net.W);
        }
        if (!masks.empty()) {
            if (net.T % 4 != 0) {
                throw ConfigError("train: skin supervision needs T divisible by 4, got T = " +
                                  std::to_string(net.T));
            }
            clip.skin_label = downsample_label(masks);
        }
    }
    return clip;
}

void cmd_train(const TrainCmdOptions& options) {
    if (options.manifests.empty()) throw std::invalid_argument("train: no manifests given");
    const RunConfig& config = options.config;

    const bool want_labels = config.use_skin_loss && config.network.use_skinmap;
    std::vector<TrainClip> clips;
    clips.reserve(options.manifests.size());
    for (const std::string& m : options.manifests) {
        clips.push_back(load_train_clip(m, config, want_labels));
    }

    // deterministic 4:1 split by clip
    std::vector<size_t> order(clips.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 split_rng(config.seed ^ 0xA5A5A5A5ull);
    std::shuffle(order.begin(), order.end(), split_rng);
    std::vector<TrainClip> train_set, val_set;
    if (clips.size() < 5) {
        train_set = clips;
    } else {
        const size_t val_count = clips.size() / 5;
        for (size_t i = 0; i < order.size(); ++i) {
            (i < val_count ? val_set : train_set).push_back(clips[order[i]]);
        }
    }

    Network net(config.network);
    net.init_params(config.seed);

    fs::create_directories(options.out_dir);
    const fs::path dir(options.out_dir);

    TrainOptions topts;
    topts.lr = config.lr;
    topts.epochs = config.epochs;
    topts.batch_size = config.batch_size;
    topts.weights = config.weights;
    topts.seed = config.seed;
    topts.freq_logits = config.freq_logits;
    topts.use_frequency_loss = config.use_frequency_loss;
    topts.use_skin_loss = config.use_skin_loss;
    topts.early_stop_pearson = options.early_stop_pearson;
    topts.loss_csv_path = (dir / "loss_curve.csv").string();
    topts.verbose = options.verbose;

    const TrainResult result = train_network(net, train_set, val_set, topts);
    save_network((dir / "checkpoint.bin").string(), net);

    std::printf("trained %zu epochs, best val L_r %.5f at epoch %lld\n", result.history.size(),
                result.best_val_pearson, static_cast<long long>(result.best_epoch));
}

InferResult cmd_infer(const InferCmdOptions& options) {
    const RunConfig& config = options.config;
    Network net(config.network);
    net.init_params(config.seed);
    if (!options.checkpoint_path.empty()) {
        load_network(options.checkpoint_path, net);
    }

    const ClipManifest manifest = read_manifest(options.manifest_path);
    const LoadedClip loaded =
        load_clip(manifest, config.network.T, config.network.H, config.network.W);

    const ForwardTrace trace = net.forward(loaded.clip.frames, false);

    InferResult result;
    result.signal.fs = loaded.clip.fps;
    result.signal.samples = trace.rppg;
    result.hr_bpm = estimate_hr(result.signal);

    if (!options.out_dir.empty()) {
        fs::create_directories(options.out_dir);
        const fs::path dir(options.out_dir);
        write_signal_csv((dir / "rppg.csv").string(), result.signal);
        write_hr_file((dir / "hr.txt").string(), result.hr_bpm);
    }
    return result;
}

BaselineCmdResult cmd_baseline(const BaselineCmdOptions& options) {
    VideoClip clip = load_clip_raw(options.clip_path);
    clip.fps = options.fps;
    if (clip.fps <= 0.0) throw std::invalid_argument("baseline: fps must be > 0");

    Tensor masks;
    if (!options.mask_path.empty()) {
        masks = load_masks(options.mask_path);
    } else {
        masks = Tensor::full(Shape{clip.frames.dim(1), clip.frames.dim(2), clip.frames.dim(3)},
                             1.0);
    }
    const RgbTrace trace = roi_mean_trace(clip, masks);

    BaselineResult result;
    if (options.method == "green") result = green_method(trace);
    else if (options.method == "chrom") result = chrom_method(trace);
    else if (options.method == "pos") result = pos_method(trace);
    else if (options.method == "ica") result = ica_method(trace);
    else throw std::invalid_argument("baseline: unknown method " + options.method);

    if (!options.out_dir.empty()) {
        fs::create_directories(options.out_dir);
        const fs::path dir(options.out_dir);
        write_signal_csv((dir / (options.method + "_signal.csv")).string(), result.signal);
        write_hr_file((dir / (options.method + "_hr.txt")).string(), result.hr_bpm);
    }
    std::printf("%s: %.3f bpm\n", options.method.c_str(), result.hr_bpm);
    return {result.hr_bpm};
}

void cmd_eval(const EvalCmdOptions& options) {
    const EvalPairs pairs = read_eval_pairs_csv(options.pairs_csv);
    const EvalReport report = compute_metrics(pairs.predicted, pairs.truth, &pairs.ids);

    fs::create_directories(options.out_dir);
    const fs::path dir(options.out_dir);
    write_report_csv((dir / "per_clip.csv").string(), report);
    write_report_summary((dir / "summary.json").string(), report);
    if (!options.histogram_edges.empty()) {
        const ErrorHistogram hist = error_histogram(report, options.histogram_edges);
        std::ofstream out((dir / "histogram.csv").string());
        out << "edge_bpm,count_below_fraction\n";
        for (size_t i = 0; i < hist.edges.size(); ++i) {
            out << hist.edges[i] << "," << hist.cumulative[i] << "\n";
        }
    }
    std::printf("MAE %.4f  RMSE %.4f  SD_e %.4f  r %s\n", report.mae, report.rmse, report.sd_e,
                report.r ? std::to_string(*report.r).c_str() : "undefined");
}

void cmd_report(const ReportCmdOptions& options) {
    // every variant checkpoint must exist before any work starts
    std::vector<std::string> missing;
    for (const std::string& variant : kReportVariants) {
        const fs::path ckpt = fs::path(options.checkpoint_dir) / (variant + ".ckpt");
        if (!fs::exists(ckpt)) missing.push_back(variant);
    }
    if (!missing.empty()) {
        std::string list;
        for (const auto& v : missing) list += (list.empty() ? "" : ", ") + v;
        throw IoError("report: missing checkpoints for: " + list);
    }

    std::ofstream out(options.out_csv);
    if (!out) throw IoError("cannot open " + options.out_csv + " for writing");
    out.precision(12);
    out << "variant,mae_bpm,rmse_bpm,sd_e_bpm,r\n";

    for (const std::string& variant : kReportVariants) {
        const RunConfig cfg = variant_config(options.config, variant);
        Network net(cfg.network);
        net.init_params(cfg.seed);
        load_network((fs::path(options.checkpoint_dir) / (variant + ".ckpt")).string(), net);

        std::vector<double> pred, truth;
        for (const std::string& mpath : options.manifests) {
            const ClipManifest manifest = read_manifest(mpath);
            const LoadedClip loaded =
                load_clip(manifest, cfg.network.T, cfg.network.H, cfg.network.W);
            const ForwardTrace trace = net.forward(loaded.clip.frames, false);
            RppgSignal signal;
            signal.fs = loaded.clip.fps;
            signal.samples = trace.rppg;
            pred.push_back(estimate_hr(signal));
            truth.push_back(loaded.hr_bpm);
        }
        const EvalReport report = compute_metrics(pred, truth);
        out << variant << "," << report.mae << "," << report.rmse << "," << report.sd_e << ",";
        if (report.r) out << *report.r;
        out << "\n";
    }
}

}  // namespace rppg
