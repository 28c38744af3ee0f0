#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>

#include "helpers.hpp"
#include "rppg/clipio.hpp"
#include "rppg/errors.hpp"
#include "rppg/skinlabel.hpp"
#include "rppg/synth.hpp"

using namespace rppg;
namespace fs = std::filesystem;

TEST_SUITE_BEGIN("data");

TEST_CASE("raw clip container round-trips losslessly") {
    std::mt19937_64 rng(137);
    VideoClip clip;
    clip.fps = 30.0;
    clip.frames = Tensor(Shape{3, 4, 6, 5});
    testutil::fill_uniform(clip.frames, rng, 0.0, 1.0);
    save_clip_raw("test_clip.rvid", clip);
    const VideoClip loaded = load_clip_raw("test_clip.rvid");
    REQUIRE(loaded.frames.shape() == clip.frames.shape());
    for (int64_t i = 0; i < clip.frames.numel(); ++i) {
        CHECK(loaded.frames[i] == clip.frames[i]);
    }
    std::remove("test_clip.rvid");
}

TEST_CASE("ppm round-trips at 8-bit precision") {
    std::mt19937_64 rng(139);
    Tensor rgb(Shape{3, 5, 7});
    testutil::fill_uniform(rgb, rng, 0.0, 1.0);
    write_ppm("test_frame.ppm", rgb);
    const Tensor loaded = read_ppm("test_frame.ppm");
    REQUIRE(loaded.shape() == rgb.shape());
    for (int64_t i = 0; i < rgb.numel(); ++i) {
        const double quantized = std::round(rgb[i] * 255.0) / 255.0;
        CHECK(std::abs(loaded[i] - quantized) < 1e-12);
    }
    std::remove("test_frame.ppm");
}

TEST_CASE("single white frame loads as ones") {
    Tensor white = Tensor::full(Shape{3, 2, 2}, 1.0);
    write_ppm("test_white.ppm", white);
    {
        std::ofstream m("test_white_manifest.txt");
        m << "frames = test_white.ppm\nfps = 30\n";
    }
    const ClipManifest manifest = read_manifest("test_white_manifest.txt");
    const LoadedClip loaded = load_clip(manifest, 1, 2, 2);
    CHECK(loaded.clip.frames.shape() == Shape{3, 1, 2, 2});
    for (int64_t i = 0; i < loaded.clip.frames.numel(); ++i) {
        CHECK(loaded.clip.frames[i] == 1.0);
    }
    std::remove("test_white.ppm");
    std::remove("test_white_manifest.txt");
}

TEST_CASE("crop confines the load to the box") {
    std::mt19937_64 rng(149);
    VideoClip a;
    a.fps = 30.0;
    a.frames = Tensor(Shape{3, 2, 8, 8});
    testutil::fill_uniform(a.frames, rng, 0.0, 1.0);
    VideoClip b = a;
    // perturb only pixels outside the crop box (x,y,w,h) = (0,0,4,4)
    for (int64_t c = 0; c < 3; ++c)
        for (int64_t t = 0; t < 2; ++t)
            for (int64_t y = 0; y < 8; ++y)
                for (int64_t x = 0; x < 8; ++x) {
                    if (y >= 4 || x >= 4) b.frames(c, t, y, x) = 0.0;
                }
    save_clip_raw("test_crop_a.rvid", a);
    save_clip_raw("test_crop_b.rvid", b);
    for (const char* name : {"a", "b"}) {
        std::ofstream m(std::string("test_crop_") + name + ".txt");
        m << "clip = test_crop_" << name << ".rvid\nfps = 30\ncrop = 0 0 4 4\n";
    }
    const LoadedClip la = load_clip(read_manifest("test_crop_a.txt"), 2, 4, 4);
    const LoadedClip lb = load_clip(read_manifest("test_crop_b.txt"), 2, 4, 4);
    for (int64_t i = 0; i < la.clip.frames.numel(); ++i) {
        CHECK(la.clip.frames[i] == lb.clip.frames[i]);
    }
    for (const char* f : {"test_crop_a.rvid", "test_crop_b.rvid", "test_crop_a.txt",
                          "test_crop_b.txt"}) {
        std::remove(f);
    }
}

TEST_CASE("oversampled ppg keeps its spectral peak after resampling") {
    // 1.2 Hz tone sampled at 1000 Hz, resampled to 30 fps over 15 s
    PpgRecord ppg;
    const double fs_in = 1000.0;
    for (int64_t i = 0; i < 15000; ++i) {
        const double t = static_cast<double>(i) / fs_in;
        ppg.times.push_back(t);
        ppg.values.push_back(std::sin(2.0 * std::numbers::pi * 1.2 * t));
    }
    const RppgSignal sig = resample_ppg(ppg, 30.0, 450);
    REQUIRE(sig.samples.size() == 450);
    const Spectrum s = psd(sig.samples, 30.0);
    int64_t best = 0;
    for (size_t k = 1; k < s.power.size(); ++k) {
        if (s.power[k] > s.power[static_cast<size_t>(best)]) best = static_cast<int64_t>(k);
    }
    CHECK(best == 18);  // 1.2 Hz bin of a 450-point DFT at 30 Hz
}

TEST_CASE("ppg resampling aligns lengths with the clip") {
    PpgRecord ppg;
    for (int64_t i = 0; i < 100; ++i) {
        ppg.times.push_back(static_cast<double>(i) / 60.0);
        ppg.values.push_back(static_cast<double>(i));
    }
    const RppgSignal sig = resample_ppg(ppg, 30.0, 48);
    CHECK(sig.samples.size() == 48);
    CHECK(sig.fs == 30.0);
    // linear ramp stays a ramp under linear interpolation
    for (size_t i = 1; i + 1 < sig.samples.size(); ++i) {
        CHECK(sig.samples[i] == doctest::Approx(2.0 * static_cast<double>(i)).epsilon(1e-12));
    }
}

TEST_CASE("segment_clips window arithmetic") {
    VideoClip clip;
    clip.fps = 30.0;
    clip.frames = Tensor(Shape{3, 600, 2, 2});
    for (int64_t t = 0; t < 600; ++t) clip.frames(0, t, 0, 0) = static_cast<double>(t);

    const auto segs = segment_clips(clip, 450, 150);
    CHECK(segs.size() == 2);
    CHECK(segs[0].frames(0, 0, 0, 0) == 0.0);
    CHECK(segs[1].frames(0, 0, 0, 0) == 150.0);
    CHECK(segs[1].frames(0, 449, 0, 0) == 599.0);

    const auto parts = segment_clips(clip, 200, 200);
    CHECK(parts.size() == 3);
    for (size_t s = 0; s < parts.size(); ++s) {
        for (int64_t t = 0; t < 200; ++t) {
            CHECK(parts[s].frames(0, t, 0, 0) ==
                  static_cast<double>(static_cast<int64_t>(s) * 200 + t));
        }
    }
    CHECK_THROWS_AS(segment_clips(clip, 601, 1), std::invalid_argument);
}

TEST_CASE("zero-amplitude synthetic clip is static with a flat waveform") {
    SynthSpec spec;
    spec.frames = 6;
    spec.height = 32;
    spec.width = 32;
    spec.pulse_scale = 0.0;
    const SyntheticClip synth = generate_synthetic(spec, 7);
    const int64_t plane = 32 * 32;
    for (int64_t c = 0; c < 3; ++c)
        for (int64_t t = 1; t < 6; ++t)
            for (int64_t i = 0; i < plane; ++i) {
                CHECK(synth.clip.frames[(c * 6 + t) * plane + i] ==
                      synth.clip.frames[c * 6 * plane + i]);
            }
    for (double v : synth.ppg.samples) CHECK(v == 0.0);
}

TEST_CASE("synthetic drift moves the landmark ring exactly") {
    SynthSpec spec;
    spec.frames = 8;
    spec.height = 64;
    spec.width = 64;
    spec.face_radius_frac = 0.25;
    spec.drift_px_per_frame = 1.0;
    const SyntheticClip synth = generate_synthetic(spec, 8);
    for (int64_t t = 0; t < 8; ++t) {
        for (int64_t i = 0; i < kPeripheralLandmarkCount; ++i) {
            const double dx = synth.landmarks.positions[static_cast<size_t>(t)][static_cast<size_t>(i)].x -
                              synth.landmarks.positions[0][static_cast<size_t>(i)].x;
            CHECK(dx == doctest::Approx(static_cast<double>(t)).epsilon(1e-12));
        }
    }
}

TEST_CASE("synthetic roi green trace peaks at the configured heart rate") {
    SynthSpec spec;
    spec.frames = 300;
    spec.height = 32;
    spec.width = 32;
    spec.hr_bpm = 72.0;
    spec.fps = 30.0;
    const SyntheticClip synth = generate_synthetic(spec, 9);

    // average the green channel over the exact ring interior
    const Tensor masks = rasterize_skin(synth.landmarks, 32, 32);
    const int64_t plane = 32 * 32;
    std::vector<double> trace(300);
    for (int64_t t = 0; t < 300; ++t) {
        double acc = 0.0;
        int64_t n = 0;
        for (int64_t i = 0; i < plane; ++i) {
            if (masks[t * plane + i] > 0.5) {
                acc += synth.clip.frames[(1 * 300 + t) * plane + i];
                ++n;
            }
        }
        trace[static_cast<size_t>(t)] = acc / static_cast<double>(n);
    }
    const Spectrum s = psd(trace, 30.0);
    int64_t best = 0;
    for (size_t k = 1; k < s.power.size(); ++k) {
        if (s.power[k] > s.power[static_cast<size_t>(best)]) best = static_cast<int64_t>(k);
    }
    CHECK(s.freqs[static_cast<size_t>(best)] == doctest::Approx(1.2));
}

TEST_CASE("synthetic dataset writes a loadable manifest") {
    SynthSpec spec;
    spec.frames = 8;
    spec.height = 32;
    spec.width = 32;
    const std::string manifest_path = write_synthetic_dataset(spec, 10, "test_synth_ds");
    const ClipManifest manifest = read_manifest(manifest_path);
    const LoadedClip loaded = load_clip(manifest, 8, 32, 32);
    CHECK(loaded.clip.frames.shape() == Shape{3, 8, 32, 32});
    CHECK(loaded.hr_bpm == 72.0);
    CHECK(loaded.ppg.samples.size() == 8);
    CHECK(loaded.seeds.size() == 29);
    fs::remove_all("test_synth_ds");
}

TEST_CASE("manifest validation") {
    {
        std::ofstream m("test_bad_manifest.txt");
        m << "fps = 30\n";  // no clip source
    }
    CHECK_THROWS_AS(read_manifest("test_bad_manifest.txt"), IoError);
    {
        std::ofstream m("test_bad_manifest.txt");
        m << "clip = x.rvid\nfps = 30\nwhat = 1\n";
    }
    CHECK_THROWS_AS(read_manifest("test_bad_manifest.txt"), IoError);
    std::remove("test_bad_manifest.txt");
}

TEST_CASE("load_clip rejects too-short clips and bad crops") {
    VideoClip clip;
    clip.fps = 30.0;
    clip.frames = Tensor(Shape{3, 4, 8, 8});
    save_clip_raw("test_short.rvid", clip);
    {
        std::ofstream m("test_short.txt");
        m << "clip = test_short.rvid\nfps = 30\n";
    }
    CHECK_THROWS_AS(load_clip(read_manifest("test_short.txt"), 8, 8, 8), IoError);
    {
        std::ofstream m("test_short.txt");
        m << "clip = test_short.rvid\nfps = 30\ncrop = 4 4 8 8\n";
    }
    CHECK_THROWS_AS(load_clip(read_manifest("test_short.txt"), 4, 8, 8), IoError);
    std::remove("test_short.rvid");
    std::remove("test_short.txt");
}

TEST_SUITE_END();
