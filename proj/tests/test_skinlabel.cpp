#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <stdexcept>

#include "helpers.hpp"
#include "rppg/skinlabel.hpp"
#include "rppg/synth.hpp"

using namespace rppg;

namespace {

LandmarkTrack static_track(const std::vector<Point2d>& poly, int64_t frames) {
    LandmarkTrack track;
    track.positions.assign(static_cast<size_t>(frames), poly);
    track.converged.assign(static_cast<size_t>(frames),
                           std::vector<bool>(poly.size(), true));
    return track;
}

// independent even-odd oracle: ray cast to +x from each pixel center
bool point_in_polygon(const std::vector<Point2d>& poly, double px, double py) {
    bool inside = false;
    const size_t n = poly.size();
    for (size_t i = 0; i < n; ++i) {
        const Point2d& a = poly[i];
        const Point2d& b = poly[(i + 1) % n];
        if ((a.y <= py && b.y > py) || (b.y <= py && a.y > py)) {
            const double x_cross = a.x + (py - a.y) / (b.y - a.y) * (b.x - a.x);
            if (x_cross > px) inside = !inside;
        }
    }
    return inside;
}

}  // namespace

TEST_SUITE_BEGIN("skinlabel");

TEST_CASE("axis-aligned square fills exactly k^2 pixels") {
    const double k = 6.0;
    std::vector<Point2d> square{{2.0, 2.0}, {2.0 + k, 2.0}, {2.0 + k, 2.0 + k}, {2.0, 2.0 + k}};
    const Tensor masks = rasterize_skin(static_track(square, 1), 16, 16);
    double area = 0.0;
    for (int64_t i = 0; i < masks.numel(); ++i) area += masks[i];
    CHECK(area == k * k);
}

TEST_CASE("static landmarks give identical masks every frame") {
    std::vector<Point2d> square{{3.0, 3.0}, {11.0, 3.0}, {11.0, 11.0}, {3.0, 11.0}};
    const Tensor masks = rasterize_skin(static_track(square, 4), 16, 16);
    const int64_t plane = 16 * 16;
    for (int64_t t = 1; t < 4; ++t) {
        for (int64_t i = 0; i < plane; ++i) CHECK(masks[t * plane + i] == masks[i]);
    }
}

TEST_CASE("triangle area lands near the analytic value") {
    std::vector<Point2d> tri{{0.0, 0.0}, {10.0, 0.0}, {0.0, 10.0}};
    const Tensor masks = rasterize_skin(static_track(tri, 1), 16, 16);
    double area = 0.0;
    for (int64_t i = 0; i < masks.numel(); ++i) area += masks[i];
    CHECK(std::abs(area - 50.0) <= 5.0 + 1e-9);
}

TEST_CASE("scanline fill matches the ray-cast oracle") {
    std::mt19937_64 rng(113);
    std::uniform_real_distribution<double> jitter(-2.0, 2.0);
    std::vector<Point2d> ring;
    for (int64_t i = 0; i < 29; ++i) {
        const double phi = 2.0 * 3.14159265358979 * static_cast<double>(i) / 29.0;
        ring.push_back(Point2d{16.0 + (9.0 + jitter(rng)) * std::cos(phi),
                               16.0 + (9.0 + jitter(rng)) * std::sin(phi)});
    }
    const Tensor masks = rasterize_skin(static_track(ring, 1), 32, 32);
    for (int64_t y = 0; y < 32; ++y) {
        for (int64_t x = 0; x < 32; ++x) {
            const bool want = point_in_polygon(ring, static_cast<double>(x),
                                               static_cast<double>(y));
            CHECK(masks(0, y, x) == (want ? 1.0 : 0.0));
        }
    }
}

TEST_CASE("masks are strictly binary") {
    std::vector<Point2d> tri{{1.3, 1.7}, {12.9, 2.2}, {6.1, 13.8}};
    const Tensor masks = rasterize_skin(static_track(tri, 2), 16, 16);
    for (int64_t i = 0; i < masks.numel(); ++i) {
        CHECK((masks[i] == 0.0 || masks[i] == 1.0));
    }
}

TEST_CASE("degenerate polygons are rejected with the frame named") {
    std::vector<Point2d> line{{1.0, 1.0}, {5.0, 5.0}, {9.0, 9.0}};
    CHECK_THROWS_WITH_AS(rasterize_skin(static_track(line, 1), 16, 16),
                         doctest::Contains("frame 0"), std::invalid_argument);
}

TEST_CASE("downsample of all-ones is all ones") {
    const Tensor masks = Tensor::full(Shape{8, 16, 16}, 1.0);
    const Tensor down = downsample_label(masks);
    CHECK(down.shape() == Shape{2, 2, 2});
    for (int64_t i = 0; i < down.numel(); ++i) CHECK(down[i] == 1.0);
}

TEST_CASE("downsample of a half-filled block is one half") {
    Tensor masks(Shape{4, 8, 8});
    for (int64_t t = 0; t < 4; ++t)
        for (int64_t y = 0; y < 8; ++y)
            for (int64_t x = 0; x < 4; ++x) masks(t, y, x) = 1.0;
    const Tensor down = downsample_label(masks);
    REQUIRE(down.shape() == Shape{1, 1, 1});
    CHECK(down[0] == 0.5);
}

TEST_CASE("downsample matches the loop oracle and conserves mass") {
    std::mt19937_64 rng(127);
    Tensor masks(Shape{8, 16, 16});
    std::bernoulli_distribution coin(0.4);
    for (int64_t i = 0; i < masks.numel(); ++i) masks[i] = coin(rng) ? 1.0 : 0.0;
    const Tensor down = downsample_label(masks);

    // independent oracle
    double full_mean = 0.0;
    for (int64_t i = 0; i < masks.numel(); ++i) full_mean += masks[i];
    full_mean /= static_cast<double>(masks.numel());
    for (int64_t to = 0; to < 2; ++to)
        for (int64_t ho = 0; ho < 2; ++ho)
            for (int64_t wo = 0; wo < 2; ++wo) {
                double acc = 0.0;
                for (int64_t dt = 0; dt < 4; ++dt)
                    for (int64_t dh = 0; dh < 8; ++dh)
                        for (int64_t dw = 0; dw < 8; ++dw)
                            acc += masks(to * 4 + dt, ho * 8 + dh, wo * 8 + dw);
                CHECK(down(to, ho, wo) == acc / 256.0);
            }

    double down_mean = 0.0;
    for (int64_t i = 0; i < down.numel(); ++i) down_mean += down[i];
    down_mean /= static_cast<double>(down.numel());
    CHECK(std::abs(down_mean - full_mean) < 1e-12);
}

TEST_CASE("downsample rejects indivisible dims") {
    Tensor masks(Shape{6, 16, 16});
    CHECK_THROWS_AS(downsample_label(masks), std::invalid_argument);
}

TEST_CASE("generate_labels on a static synthetic clip matches the ring interior") {
    SynthSpec spec;
    spec.frames = 8;
    spec.height = 64;
    spec.width = 64;
    spec.fps = 30.0;
    const SyntheticClip synth = generate_synthetic(spec, 5);
    const std::vector<Image> gray = clip_to_gray(synth.clip);
    const SkinLabel label = generate_labels(gray, synth.seeds(), FlowParams{});

    CHECK(label.masks.shape() == Shape{8, 64, 64});
    CHECK(label.downsampled.shape() == Shape{2, 8, 8});

    // the face does not move (only the pulse modulation), so the tracked
    // masks may differ between frames in at most a sliver of boundary pixels
    const int64_t plane = 64 * 64;
    double area0 = 0.0;
    for (int64_t i = 0; i < plane; ++i) area0 += label.masks[i];
    for (int64_t t = 1; t < 8; ++t) {
        int64_t flips = 0;
        for (int64_t i = 0; i < plane; ++i) {
            flips += (label.masks[t * plane + i] != label.masks[i]) ? 1 : 0;
        }
        CHECK(static_cast<double>(flips) < 0.01 * area0);
    }

    // mask interior approximates the polygon through the true ring
    const Tensor want = rasterize_skin(synth.landmarks, 64, 64);
    int64_t diff = 0;
    for (int64_t i = 0; i < plane; ++i) {
        diff += (want[i] != label.masks[i]) ? 1 : 0;
    }
    double want_area = 0.0;
    for (int64_t i = 0; i < plane; ++i) want_area += want[i];
    CHECK(static_cast<double>(diff) < 0.05 * want_area);
}

TEST_CASE("mask area moves smoothly on a drifting clip") {
    SynthSpec spec;
    spec.frames = 10;
    spec.height = 64;
    spec.width = 64;
    spec.face_radius_frac = 0.25;
    spec.drift_px_per_frame = 1.0;
    const SyntheticClip synth = generate_synthetic(spec, 6);
    const SkinLabel label =
        generate_labels(clip_to_gray(synth.clip), synth.seeds(), FlowParams{});

    const int64_t plane = 64 * 64;
    std::vector<double> area(10), cx(10);
    for (int64_t t = 0; t < 10; ++t) {
        double a = 0.0, sx = 0.0;
        for (int64_t y = 0; y < 64; ++y)
            for (int64_t x = 0; x < 64; ++x) {
                if (label.masks[t * plane + y * 64 + x] > 0.5) {
                    a += 1.0;
                    sx += static_cast<double>(x);
                }
            }
        area[static_cast<size_t>(t)] = a;
        cx[static_cast<size_t>(t)] = sx / a;
    }
    for (int64_t t = 1; t < 10; ++t) {
        CHECK(std::abs(area[static_cast<size_t>(t)] - area[static_cast<size_t>(t - 1)]) <
              0.05 * area[static_cast<size_t>(t - 1)]);
    }
    // centroid slope tracks the configured drift
    const double slope = (cx[9] - cx[0]) / 9.0;
    CHECK(std::abs(slope - 1.0) < 0.5);
}

TEST_CASE("mask container round trip and pgm export") {
    std::mt19937_64 rng(131);
    Tensor masks(Shape{3, 8, 8});
    std::bernoulli_distribution coin(0.5);
    for (int64_t i = 0; i < masks.numel(); ++i) masks[i] = coin(rng) ? 1.0 : 0.0;
    save_masks("test_masks.msk", masks);
    const Tensor loaded = load_masks("test_masks.msk");
    REQUIRE(loaded.shape() == masks.shape());
    for (int64_t i = 0; i < masks.numel(); ++i) CHECK(loaded[i] == masks[i]);
    std::remove("test_masks.msk");

    export_masks_pgm("test_", masks);
    std::ifstream pgm("test_mask_00000.pgm", std::ios::binary);
    CHECK(pgm.good());
    std::string magic;
    pgm >> magic;
    CHECK(magic == "P5");
    for (int64_t t = 0; t < 3; ++t) {
        char name[64];
        std::snprintf(name, sizeof(name), "test_mask_%05lld.pgm", static_cast<long long>(t));
        std::remove(name);
    }
}

TEST_SUITE_END();
