#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "helpers.hpp"
#include "rppg/dsp.hpp"
#include "rppg/errors.hpp"

using namespace rppg;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> tone(double freq_hz, double fs, size_t n, double amp = 1.0,
                         double phase = 0.0) {
    std::vector<double> out(n);
    for (size_t i = 0; i < n; ++i) {
        out[i] = amp * std::sin(2.0 * kPi * freq_hz * static_cast<double>(i) / fs + phase);
    }
    return out;
}

}  // namespace

TEST_SUITE_BEGIN("dsp");

TEST_CASE("dft round-trips at power-of-two and odd lengths") {
    std::mt19937_64 rng(61);
    for (size_t n : {64u, 450u, 37u}) {
        auto x = testutil::random_vector(n, rng);
        std::vector<std::complex<double>> cx(n);
        for (size_t i = 0; i < n; ++i) cx[i] = {x[i], 0.0};
        const auto back = dft(dft(cx, false), true);
        for (size_t i = 0; i < n; ++i) {
            CHECK(std::abs(back[i].real() - x[i]) < 1e-10);
            CHECK(std::abs(back[i].imag()) < 1e-10);
        }
    }
}

TEST_CASE("psd of a bin-centered tone is a single dominant line") {
    const double fs = 32.0;
    const auto x = tone(4.0, fs, 128);  // bin 16 of 128
    const Spectrum s = psd(x, fs);
    const size_t peak = 16;
    CHECK(s.freqs[peak] == doctest::Approx(4.0));
    for (size_t k = 0; k < s.power.size(); ++k) {
        if (k + 1 < peak || k > peak + 1) {
            CHECK(s.power[peak] >= 100.0 * s.power[k]);
        }
    }
}

TEST_CASE("psd of a constant signal is zero") {
    std::vector<double> x(64, 3.25);
    const Spectrum s = psd(x, 30.0);
    for (double p : s.power) CHECK(std::abs(p) < 1e-20);
}

TEST_CASE("psd satisfies Parseval against time-domain variance") {
    std::mt19937_64 rng(67);
    for (size_t n : {128u, 450u}) {
        const auto x = testutil::random_vector(n, rng);
        const Spectrum s = psd(x, 30.0);
        double total = 0.0;
        for (size_t k = 0; k < s.power.size(); ++k) {
            const bool edge = (k == 0) || (n % 2 == 0 && k == n / 2);
            total += (edge ? 1.0 : 2.0) * s.power[k];
        }
        // sum over all bins of |X|^2 / N equals N * var; one-sided doubling
        CHECK(std::abs(total / static_cast<double>(n) - variance(x)) < 1e-10);
    }
}

TEST_CASE("psd rejects bad inputs") {
    std::vector<double> x(16, 0.0);
    CHECK_THROWS_AS(psd(x, 0.0), std::invalid_argument);
    std::vector<double> tiny(4, 0.0);
    CHECK_THROWS_AS(psd(tiny, 30.0), std::invalid_argument);
}

TEST_CASE("estimate_hr recovers a bin-centered 72 bpm exactly") {
    const auto x = tone(1.2, 30.0, 450);
    CHECK(estimate_hr(x, 30.0) == 72.0);
}

TEST_CASE("estimate_hr ignores out-of-band peaks") {
    // both tones bin-centered at N=420 so the strong one cannot leak
    const double fs = 30.0;
    auto x = tone(0.5, fs, 420, 10.0);  // strong but below band
    const auto weak = tone(1.0, fs, 420, 0.2);
    for (size_t i = 0; i < x.size(); ++i) x[i] += weak[i];
    CHECK(estimate_hr(x, fs) == doctest::Approx(60.0));
}

TEST_CASE("estimate_hr picks the stronger of two in-band tones") {
    const double fs = 30.0;
    auto x = tone(1.0, fs, 450, 1.0);
    const auto second = tone(2.0, fs, 450, 0.5);
    for (size_t i = 0; i < x.size(); ++i) x[i] += second[i];
    CHECK(estimate_hr(x, fs) == doctest::Approx(60.0));
    // PSD oracle: 4x power ratio between the two lines
    const Spectrum s = psd(x, fs);
    const size_t k1 = 15, k2 = 30;  // 1 Hz and 2 Hz bins of a 450-point DFT
    CHECK(s.power[k1] / s.power[k2] == doctest::Approx(4.0).epsilon(1e-6));
}

TEST_CASE("estimate_hr is invariant under positive scaling") {
    std::mt19937_64 rng(71);
    auto x = testutil::random_vector(300, rng);
    const double hr = estimate_hr(x, 30.0);
    for (auto& v : x) v *= 37.5;
    CHECK(estimate_hr(x, 30.0) == hr);
    CHECK(hr >= 42.0);
    CHECK(hr <= 240.0);
}

TEST_CASE("estimate_hr reports missing in-band signal") {
    std::vector<double> x(64, 0.0);
    x[0] = 1e-300;
    CHECK_THROWS_AS(estimate_hr(x, 30.0), NoSignalError);
}

TEST_CASE("bandpass passes in-band tones untouched") {
    const double fs = 30.0;
    const auto x = tone(1.2, fs, 450);
    const auto y = bandpass(x, fs);
    for (size_t i = 0; i < x.size(); ++i) CHECK(std::abs(y[i] - x[i]) < 1e-10);
}

TEST_CASE("bandpass removes DC entirely") {
    std::vector<double> x(128, 2.5);
    const auto y = bandpass(x, 30.0);
    for (double v : y) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("bandpass strips out-of-band energy") {
    const double fs = 30.0;
    auto x = tone(1.2, fs, 450);
    const auto noise = tone(6.0, fs, 450, 2.0);
    const auto slow = tone(0.2, fs, 450, 2.0);
    for (size_t i = 0; i < x.size(); ++i) x[i] += noise[i] + slow[i];
    const auto y = bandpass(x, fs);
    const Spectrum sy = psd(y, fs);
    const Spectrum sx = psd(x, fs);
    double out_band = 0.0, in_total = 0.0;
    for (size_t k = 0; k < sy.power.size(); ++k) {
        if (sy.freqs[k] < kBandLowHz || sy.freqs[k] > kBandHighHz) out_band += sy.power[k];
        in_total += sx.power[k];
    }
    CHECK(out_band < 1e-10 * in_total);
}

TEST_CASE("bandpass validates the band") {
    std::vector<double> x(64, 0.0);
    CHECK_THROWS_AS(bandpass(x, 30.0, 4.0, 0.7), std::invalid_argument);
    CHECK_THROWS_AS(bandpass(x, 30.0, 0.7, 20.0), std::invalid_argument);
}

TEST_CASE("pearson_r on exact linear relations") {
    std::vector<double> x{1.0, 2.0, 3.0, 4.0};
    std::vector<double> y{5.0, 7.0, 9.0, 11.0};  // 2x + 3
    CHECK(pearson_r(x, y) == doctest::Approx(1.0).epsilon(1e-12));
    std::vector<double> z{-1.0, -2.0, -3.0, -4.0};
    CHECK(pearson_r(x, z) == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("pearson_r of independent noise concentrates near zero") {
    std::mt19937_64 rng(73);
    int hits = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto x = testutil::random_vector(10000, rng);
        const auto y = testutil::random_vector(10000, rng);
        if (std::abs(pearson_r(x, y)) < 0.05) ++hits;
    }
    CHECK(hits >= 99);
}

TEST_CASE("pearson_r rejects zero variance") {
    std::vector<double> x(8, 1.0);
    std::vector<double> y{1, 2, 3, 4, 5, 6, 7, 8};
    CHECK_THROWS_AS(pearson_r(x, y), std::invalid_argument);
}

TEST_SUITE_END();
