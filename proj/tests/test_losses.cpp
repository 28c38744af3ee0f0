#include <doctest.h>

#include <cmath>
#include "rppg/dsp.hpp"
#include <numbers>
#include <random>
#include <stdexcept>

#include "helpers.hpp"
#include "rppg/losses.hpp"

using namespace rppg;
using testutil::check_gradient;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> tone(double freq_hz, double fs, size_t n, double amp = 1.0) {
    std::vector<double> out(n);
    for (size_t i = 0; i < n; ++i) {
        out[i] = amp * std::sin(2.0 * kPi * freq_hz * static_cast<double>(i) / fs);
    }
    return out;
}

}  // namespace

TEST_SUITE_BEGIN("losses");

TEST_CASE("pearson_loss identities") {
    std::vector<double> x{1.0, 2.0, 3.0, 4.0};
    CHECK(pearson_loss(x, x).value == doctest::Approx(0.0).epsilon(1e-13));

    std::vector<double> a{1.0, 2.0, 3.0};
    std::vector<double> b{3.0, 2.0, 1.0};
    CHECK(pearson_loss(a, b).value == doctest::Approx(2.0).epsilon(1e-13));

    std::vector<double> c{2.0, 4.0, 6.0};  // positive scaling of a
    CHECK(pearson_loss(a, c).value == doctest::Approx(0.0).epsilon(1e-13));
}

TEST_CASE("pearson_loss is invariant under positive affine maps") {
    std::mt19937_64 rng(79);
    const auto x = testutil::random_vector(64, rng);
    const auto y = testutil::random_vector(64, rng);
    const double base = pearson_loss(x, y).value;
    auto scaled = x;
    for (auto& v : scaled) v = 2.75 * v + 11.0;
    CHECK(std::abs(pearson_loss(scaled, y).value - base) < 1e-10);
}

TEST_CASE("pearson_loss stays within [0, 2]") {
    std::mt19937_64 rng(83);
    for (int trial = 0; trial < 50; ++trial) {
        const auto x = testutil::random_vector(32, rng);
        const auto y = testutil::random_vector(32, rng);
        const double v = pearson_loss(x, y).value;
        CHECK(v >= 0.0);
        CHECK(v <= 2.0);
    }
}

TEST_CASE("pearson_loss constant input falls back to 1 with a flag") {
    std::vector<double> flat(16, 4.0);
    std::vector<double> y{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16};
    const auto out = pearson_loss(flat, y);
    CHECK(out.value == 1.0);
    CHECK(out.degenerate);
    for (double g : out.grad) CHECK(g == 0.0);
}

TEST_CASE("pearson_loss gradient agrees with finite differences") {
    std::mt19937_64 rng(89);
    auto x = testutil::random_vector(32, rng);
    const auto y = testutil::random_vector(32, rng);
    const auto out = pearson_loss(x, y);
    auto loss = [&]() { return pearson_loss(x, y).value; };
    CHECK(check_gradient(loss, x.data(), out.grad.data(), 32).max_rel_err < 1e-6);
}

TEST_CASE("frequency_ce_loss is minimized at the true bin") {
    const double fs = 30.0;
    const auto x = tone(1.2, fs, 150);  // bin 6 of 150
    const double true_loss = frequency_ce_loss(x, fs, 72.0).value;
    // scoring the same spectrum against every other in-band bin must cost more
    for (double f = 0.75; f <= 3.95; f += 0.2) {
        const double hr = f * 60.0;
        if (std::abs(hr - 72.0) < 4.0) continue;
        CHECK(frequency_ce_loss(x, fs, hr).value > true_loss);
    }
}

TEST_CASE("frequency_ce_loss on white noise approaches log(#bins)") {
    std::mt19937_64 rng(97);
    const double fs = 30.0;
    const size_t n = 450;
    // low-amplitude noise keeps the PSD logits near zero, where the uniform
    // log(#bins) approximation is meaningful
    std::normal_distribution<double> gauss(0.0, 0.1);
    std::vector<double> probe(n);
    for (auto& v : probe) v = gauss(rng);
    const auto nbins = band_bins(psd(probe, fs)).size();
    const double expected = std::log(static_cast<double>(nbins));

    double acc = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> x(n);
        for (auto& v : x) v = gauss(rng);
        acc += frequency_ce_loss(x, fs, 72.0).value;
    }
    const double mean_loss = acc / 100.0;
    CHECK(mean_loss > 0.8 * expected);
    CHECK(mean_loss < 1.2 * expected);
}

TEST_CASE("frequency_ce_loss gradient agrees with finite differences") {
    std::mt19937_64 rng(101);
    auto x = testutil::random_vector(64, rng, -0.5, 0.5);
    const auto out = frequency_ce_loss(x, 30.0, 90.0);
    auto loss = [&]() { return frequency_ce_loss(x, 30.0, 90.0).value; };
    CHECK(check_gradient(loss, x.data(), out.grad.data(), 64).max_rel_err < 1e-4);
}

TEST_CASE("frequency_ce_loss log-psd variant also differentiates") {
    std::mt19937_64 rng(103);
    auto x = testutil::random_vector(64, rng, -0.5, 0.5);
    const auto out = frequency_ce_loss(x, 30.0, 90.0, FreqLogits::LogPsd);
    auto loss = [&]() { return frequency_ce_loss(x, 30.0, 90.0, FreqLogits::LogPsd).value; };
    CHECK(check_gradient(loss, x.data(), out.grad.data(), 64).max_rel_err < 1e-4);
}

TEST_CASE("frequency_ce_loss rejects out-of-band ground truth") {
    const auto x = tone(1.2, 30.0, 150);
    CHECK_THROWS_AS(frequency_ce_loss(x, 30.0, 30.0), std::invalid_argument);
    CHECK_THROWS_AS(frequency_ce_loss(x, 30.0, 300.0), std::invalid_argument);
}

TEST_CASE("skin_bce_loss at the label is nearly zero") {
    Tensor label(Shape{2, 2, 2}, {1, 0, 1, 1, 0, 0, 1, 0});
    const auto out = skin_bce_loss(label, label);
    CHECK(out.value <= 2e-7);
    CHECK(out.value >= 0.0);
}

TEST_CASE("skin_bce_loss at one half is ln 2") {
    Tensor map = Tensor::full(Shape{2, 3, 3}, 0.5);
    Tensor label(Shape{2, 3, 3});
    for (int64_t i = 0; i < label.numel(); ++i) label[i] = (i % 2 == 0) ? 1.0 : 0.0;
    const auto out = skin_bce_loss(map, label);
    CHECK(out.value == doctest::Approx(std::log(2.0)).epsilon(1e-13));
}

TEST_CASE("skin_bce_loss gradient agrees with finite differences") {
    std::mt19937_64 rng(107);
    Tensor map(Shape{2, 3, 3});
    testutil::fill_uniform(map, rng, 0.05, 0.95);
    Tensor label(Shape{2, 3, 3});
    for (int64_t i = 0; i < label.numel(); ++i) label[i] = (i % 3 == 0) ? 1.0 : 0.0;
    const auto out = skin_bce_loss(map, label);
    auto loss = [&]() { return skin_bce_loss(map, label).value; };
    CHECK(check_gradient(loss, map.data(), out.grad.data(), map.numel()).max_rel_err < 1e-6);
}

TEST_CASE("skin_bce_loss rejects shape mismatch") {
    Tensor map(Shape{2, 2, 2});
    Tensor label(Shape{2, 2, 3});
    CHECK_THROWS_AS(skin_bce_loss(map, label), std::invalid_argument);
}

TEST_CASE("total_loss weighted sum") {
    LossWeights w;
    w.alpha = 1.0;
    w.beta = 1.0;
    CHECK(total_loss(1.0, 2.0, 3.0, w) == 6.0);

    // dropping the skin term reproduces the two-loss training variant
    w.beta = 0.0;
    CHECK(total_loss(1.0, 2.0, 3.0, w) == 3.0);

    // alpha-only variant without the frequency term
    w.alpha = 1.0;
    CHECK(total_loss(1.5, 0.0, 9.0, w) == 1.5);

    w.alpha = 0.25;
    w.beta = 2.0;
    CHECK(total_loss(4.0, 1.0, 0.5, w) == 3.0);
}

TEST_SUITE_END();
