#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "rppg/checkpoint.hpp"
#include "rppg/commands.hpp"
#include "rppg/skinlabel.hpp"
#include "rppg/errors.hpp"

using namespace rppg;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::path("cli_test_tmp") / name) {
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all("cli_test_tmp"); }
};

SynthSpec tiny_spec() {
    SynthSpec spec;
    spec.frames = 16;
    spec.height = 32;
    spec.width = 32;
    spec.fps = 16.0;
    spec.hr_bpm = 90.0;  // 1.5 Hz on a 1 s window
    return spec;
}

RunConfig tiny_config() {
    RunConfig cfg;
    cfg.network.T = 16;
    cfg.network.H = 32;
    cfg.network.W = 32;
    cfg.epochs = 0;
    cfg.lr = 1e-3;
    cfg.seed = 11;
    return cfg;
}

bool same_file_bytes(const fs::path& a, const fs::path& b) {
    std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
    std::string da((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
    std::string db((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
    return !da.empty() && da == db;
}

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("run config round trip and validation") {
    RunConfig cfg = tiny_config();
    cfg.weights.alpha = 0.75;
    cfg.use_frequency_loss = false;
    write_run_config("test_config.txt", cfg);
    const RunConfig loaded = read_run_config("test_config.txt");
    CHECK(loaded.network.T == 16);
    CHECK(loaded.weights.alpha == 0.75);
    CHECK_FALSE(loaded.use_frequency_loss);
    std::remove("test_config.txt");

    {
        std::ofstream bad("test_config.txt");
        bad << "unknown_key = 3\n";
    }
    CHECK_THROWS_AS(read_run_config("test_config.txt"), ConfigError);
    {
        std::ofstream bad("test_config.txt");
        bad << "T = 16\nH = 20\nW = 32\n";
    }
    CHECK_THROWS_AS(read_run_config("test_config.txt"), ConfigError);
    std::remove("test_config.txt");
}

TEST_CASE("synth command writes a complete dataset") {
    TempDir tmp("synth");
    SynthCmdOptions opts;
    opts.spec = tiny_spec();
    opts.seed = 3;
    opts.out_dir = (tmp.path / "ds").string();
    cmd_synth(opts);
    CHECK(fs::exists(tmp.path / "ds" / "manifest.txt"));
    CHECK(fs::exists(tmp.path / "ds" / "clip.rvid"));
    CHECK(fs::exists(tmp.path / "ds" / "ppg.csv"));
    CHECK(fs::exists(tmp.path / "ds" / "seed.csv"));
    CHECK(fs::exists(tmp.path / "ds" / "hr.txt"));
    CHECK(fs::exists(tmp.path / "ds" / "track_gt.csv"));
}

TEST_CASE("skinlabel command produces a binary mask container") {
    TempDir tmp("skinlabel");
    SynthCmdOptions synth;
    synth.spec = tiny_spec();
    synth.seed = 4;
    synth.out_dir = (tmp.path / "ds").string();
    cmd_synth(synth);

    SkinlabelCmdOptions opts;
    opts.manifest_path = (tmp.path / "ds" / "manifest.txt").string();
    opts.out_dir = (tmp.path / "labels").string();
    opts.T = 16;
    opts.H = 32;
    opts.W = 32;
    cmd_skinlabel(opts);

    const Tensor masks = load_masks((tmp.path / "labels" / "masks.msk").string());
    CHECK(masks.shape() == Shape{16, 32, 32});
    double area = 0.0;
    for (int64_t i = 0; i < masks.numel(); ++i) {
        CHECK((masks[i] == 0.0 || masks[i] == 1.0));
        area += masks[i];
    }
    CHECK(area > 0.0);
    CHECK(fs::exists(tmp.path / "labels" / "track.csv"));
}

TEST_CASE("zero-epoch training checkpoints the initialization") {
    TempDir tmp("train0");
    SynthCmdOptions synth;
    synth.spec = tiny_spec();
    synth.seed = 5;
    synth.out_dir = (tmp.path / "ds").string();
    cmd_synth(synth);

    TrainCmdOptions train;
    train.config = tiny_config();
    train.manifests = {(tmp.path / "ds" / "manifest.txt").string()};
    train.out_dir = (tmp.path / "run").string();
    cmd_train(train);

    Network fresh(train.config.network);
    fresh.init_params(train.config.seed);
    Network loaded(train.config.network);
    loaded.init_params(99);  // overwritten by the checkpoint
    load_network((tmp.path / "run" / "checkpoint.bin").string(), loaded);
    auto a = fresh.state();
    auto b = loaded.state();
    for (size_t i = 0; i < a.size(); ++i) {
        for (int64_t j = 0; j < a[i].second->numel(); ++j) {
            CHECK((*a[i].second)[j] == (*b[i].second)[j]);
        }
    }
    CHECK(fs::exists(tmp.path / "run" / "loss_curve.csv"));
}

TEST_CASE("training twice with one seed is bitwise reproducible") {
    TempDir tmp("train2");
    SynthCmdOptions synth;
    synth.spec = tiny_spec();
    synth.seed = 6;
    synth.out_dir = (tmp.path / "ds").string();
    cmd_synth(synth);

    TrainCmdOptions train;
    train.config = tiny_config();
    train.config.epochs = 2;
    train.config.use_skin_loss = false;  // keep runtime small
    train.config.use_frequency_loss = false;
    train.manifests = {(tmp.path / "ds" / "manifest.txt").string()};
    train.out_dir = (tmp.path / "run_a").string();
    cmd_train(train);
    train.out_dir = (tmp.path / "run_b").string();
    cmd_train(train);

    CHECK(same_file_bytes(tmp.path / "run_a" / "checkpoint.bin",
                          tmp.path / "run_b" / "checkpoint.bin"));
}

TEST_CASE("infer runs on an untrained checkpoint and writes the signal") {
    TempDir tmp("infer");
    SynthCmdOptions synth;
    synth.spec = tiny_spec();
    synth.seed = 7;
    synth.out_dir = (tmp.path / "ds").string();
    cmd_synth(synth);

    TrainCmdOptions train;
    train.config = tiny_config();
    train.manifests = {(tmp.path / "ds" / "manifest.txt").string()};
    train.out_dir = (tmp.path / "run").string();
    cmd_train(train);

    InferCmdOptions infer;
    infer.config = train.config;
    infer.checkpoint_path = (tmp.path / "run" / "checkpoint.bin").string();
    infer.manifest_path = (tmp.path / "ds" / "manifest.txt").string();
    infer.out_dir = (tmp.path / "out").string();
    const InferResult result = cmd_infer(infer);
    CHECK(result.signal.samples.size() == 16);
    CHECK(result.hr_bpm >= 42.0);
    CHECK(result.hr_bpm <= 240.0);

    std::ifstream csv((tmp.path / "out" / "rppg.csv").string());
    int64_t rows = -1;  // minus the header
    std::string line;
    while (std::getline(csv, line)) ++rows;
    CHECK(rows == 16);
}

TEST_CASE("infer refuses a checkpoint of the wrong shape") {
    TempDir tmp("infer_bad");
    SynthCmdOptions synth;
    synth.spec = tiny_spec();
    synth.seed = 8;
    synth.out_dir = (tmp.path / "ds").string();
    cmd_synth(synth);

    RunConfig other = tiny_config();
    other.network.lffg_out = 16;
    Network small(other.network);
    small.init_params(1);
    save_network((tmp.path / "small.ckpt").string(), small);

    InferCmdOptions infer;
    infer.config = tiny_config();
    infer.checkpoint_path = (tmp.path / "small.ckpt").string();
    infer.manifest_path = (tmp.path / "ds" / "manifest.txt").string();
    CHECK_THROWS_AS(cmd_infer(infer), IoError);
}

TEST_CASE("baseline command runs end to end") {
    TempDir tmp("baseline");
    SynthSpec spec = tiny_spec();
    spec.frames = 128;
    spec.hr_bpm = 75.0;
    spec.fps = 16.0;
    SynthCmdOptions synth;
    synth.spec = spec;
    synth.seed = 9;
    synth.out_dir = (tmp.path / "ds").string();
    cmd_synth(synth);

    BaselineCmdOptions opts;
    opts.method = "green";
    opts.clip_path = (tmp.path / "ds" / "clip.rvid").string();
    opts.fps = 16.0;
    opts.out_dir = (tmp.path / "out").string();
    const BaselineCmdResult result = cmd_baseline(opts);
    CHECK(result.hr_bpm >= 42.0);
    CHECK(result.hr_bpm <= 240.0);
    CHECK(fs::exists(tmp.path / "out" / "green_signal.csv"));
    CHECK(fs::exists(tmp.path / "out" / "green_hr.txt"));

    opts.method = "nonsense";
    CHECK_THROWS_AS(cmd_baseline(opts), std::invalid_argument);
}

TEST_CASE("eval command writes per-clip csv and summary") {
    TempDir tmp("eval");
    {
        std::ofstream pairs((tmp.path / "pairs.csv").string());
        pairs << "id,predicted,truth\n";
        pairs << "a,72,70\n";
        pairs << "b,80,84\n";
    }
    EvalCmdOptions opts;
    opts.pairs_csv = (tmp.path / "pairs.csv").string();
    opts.out_dir = (tmp.path / "out").string();
    opts.histogram_edges = {3.0, 5.0};
    cmd_eval(opts);
    CHECK(fs::exists(tmp.path / "out" / "per_clip.csv"));
    CHECK(fs::exists(tmp.path / "out" / "summary.json"));
    CHECK(fs::exists(tmp.path / "out" / "histogram.csv"));

    std::ifstream summary((tmp.path / "out" / "summary.json").string());
    std::string text((std::istreambuf_iterator<char>(summary)),
                     std::istreambuf_iterator<char>());
    CHECK(text.find("\"mae_bpm\": 3.0") != std::string::npos);
}

TEST_CASE("report requires every variant checkpoint") {
    TempDir tmp("report");
    SynthCmdOptions synth;
    synth.spec = tiny_spec();
    synth.seed = 10;
    synth.out_dir = (tmp.path / "ds").string();
    cmd_synth(synth);

    ReportCmdOptions report;
    report.config = tiny_config();
    report.checkpoint_dir = (tmp.path / "ckpts").string();
    report.manifests = {(tmp.path / "ds" / "manifest.txt").string()};
    report.out_csv = (tmp.path / "table.csv").string();
    fs::create_directories(report.checkpoint_dir);
    CHECK_THROWS_WITH_AS(cmd_report(report), doctest::Contains("no_skinmap"), IoError);

    // materialize all five variants as untrained checkpoints
    for (const std::string& variant : kReportVariants) {
        const RunConfig cfg = variant_config(report.config, variant);
        Network net(cfg.network);
        net.init_params(cfg.seed);
        save_network((fs::path(report.checkpoint_dir) / (variant + ".ckpt")).string(), net);
    }
    cmd_report(report);

    std::ifstream csv(report.out_csv);
    std::string line;
    std::getline(csv, line);
    CHECK(line == "variant,mae_bpm,rmse_bpm,sd_e_bpm,r");
    int64_t rows = 0;
    while (std::getline(csv, line)) ++rows;
    CHECK(rows == 5);
}

TEST_CASE("error categories map to stable tokens") {
    CHECK(std::string(error_category(ConfigError("x"))) == "config-error");
    CHECK(std::string(error_category(IoError("x"))) == "io-error");
    CHECK(std::string(error_category(TrackingError("x", 3))) == "tracking-failure");
    CHECK(std::string(error_category(NoSignalError("x"))) == "no-signal");
    CHECK(std::string(error_category(ConvergenceError("x"))) == "convergence-error");
    CHECK(std::string(error_category(DivergenceError("x"))) == "divergence");
    CHECK(std::string(error_category(std::invalid_argument("x"))) == "invalid-argument");
}

TEST_SUITE_END();
