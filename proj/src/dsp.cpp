#include "rppg/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "rppg/errors.hpp"

namespace rppg {

namespace {

constexpr double kPi = std::numbers::pi;

bool is_power_of_two(size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// In-place iterative radix-2 Cooley-Tukey.
void fft_radix2(std::vector<std::complex<double>>& a, bool inverse) {
    const size_t n = a.size();
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        const double ang = 2.0 * kPi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (size_t j = 0; j < len / 2; ++j) {
                const std::complex<double> u = a[i + j];
                const std::complex<double> v = a[i + j + len / 2] * w;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

std::vector<std::complex<double>> dft_direct(const std::vector<std::complex<double>>& x,
                                             bool inverse) {
    const size_t n = x.size();
    std::vector<std::complex<double>> out(n);
    const double sign = inverse ? 1.0 : -1.0;
    for (size_t k = 0; k < n; ++k) {
        std::complex<double> acc(0.0, 0.0);
        for (size_t m = 0; m < n; ++m) {
            const double ang = sign * 2.0 * kPi * static_cast<double>(k * m % n) /
                               static_cast<double>(n);
            acc += x[m] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        out[k] = acc;
    }
    return out;
}

}  // namespace

std::vector<std::complex<double>> dft(const std::vector<std::complex<double>>& x, bool inverse) {
    if (x.empty()) return {};
    std::vector<std::complex<double>> out;
    if (is_power_of_two(x.size())) {
        out = x;
        fft_radix2(out, inverse);
    } else {
        out = dft_direct(x, inverse);
    }
    if (inverse) {
        const double inv_n = 1.0 / static_cast<double>(x.size());
        for (auto& v : out) v *= inv_n;
    }
    return out;
}

std::vector<std::complex<double>> dft_real(const std::vector<double>& x) {
    std::vector<std::complex<double>> cx(x.size());
    for (size_t i = 0; i < x.size(); ++i) cx[i] = {x[i], 0.0};
    return dft(cx, false);
}

double mean(const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v;
    return x.empty() ? 0.0 : s / static_cast<double>(x.size());
}

double variance(const std::vector<double>& x) {
    const double m = mean(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return x.empty() ? 0.0 : s / static_cast<double>(x.size());
}

Spectrum psd(const std::vector<double>& x, double fs, SpectralWindow window) {
    if (fs <= 0.0) throw std::invalid_argument("psd: fs must be > 0");
    if (x.size() < 8) throw std::invalid_argument("psd: need at least 8 samples");
    const size_t n = x.size();

    const double m = mean(x);
    std::vector<double> centered(n);
    for (size_t i = 0; i < n; ++i) centered[i] = x[i] - m;
    if (window == SpectralWindow::Hann) {
        for (size_t i = 0; i < n; ++i) {
            centered[i] *= 0.5 * (1.0 - std::cos(2.0 * kPi * static_cast<double>(i) /
                                                 static_cast<double>(n - 1)));
        }
    }

    const auto spec = dft_real(centered);
    Spectrum out;
    out.fs = fs;
    out.n = static_cast<int64_t>(n);
    const size_t half = n / 2;
    out.freqs.resize(half + 1);
    out.power.resize(half + 1);
    for (size_t k = 0; k <= half; ++k) {
        out.freqs[k] = static_cast<double>(k) * fs / static_cast<double>(n);
        out.power[k] = std::norm(spec[k]) / static_cast<double>(n);
    }
    return out;
}

std::vector<int64_t> band_bins(const Spectrum& s, double f_lo, double f_hi) {
    std::vector<int64_t> bins;
    for (size_t k = 0; k < s.freqs.size(); ++k) {
        if (s.freqs[k] >= f_lo && s.freqs[k] <= f_hi) bins.push_back(static_cast<int64_t>(k));
    }
    return bins;
}

double estimate_hr(const std::vector<double>& x, double fs) {
    const Spectrum s = psd(x, fs);
    const auto bins = band_bins(s);
    if (bins.empty()) throw NoSignalError("estimate_hr: no spectral bins inside the band");
    int64_t best = -1;
    double best_power = 0.0;
    for (int64_t k : bins) {
        if (s.power[static_cast<size_t>(k)] > best_power) {
            best_power = s.power[static_cast<size_t>(k)];
            best = k;
        }
    }
    if (best < 0) throw NoSignalError("estimate_hr: in-band power is identically zero");
    return 60.0 * s.freqs[static_cast<size_t>(best)];
}

std::vector<double> bandpass(const std::vector<double>& x, double fs, double f_lo, double f_hi) {
    if (!(f_lo < f_hi) || !(f_hi < fs / 2.0) || f_lo <= 0.0) {
        throw std::invalid_argument("bandpass: need 0 < f_lo < f_hi < fs/2");
    }
    const size_t n = x.size();
    std::vector<std::complex<double>> spec = dft_real(x);
    for (size_t k = 0; k < n; ++k) {
        // frequency of bin k, folded to the Nyquist range
        const size_t kf = std::min(k, n - k);
        const double f = static_cast<double>(kf) * fs / static_cast<double>(n);
        if (f < f_lo || f > f_hi) spec[k] = {0.0, 0.0};
    }
    const auto back = dft(spec, true);
    std::vector<double> out(n);
    for (size_t i = 0; i < n; ++i) out[i] = back[i].real();
    return out;
}

double pearson_r(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw std::invalid_argument("pearson_r: inputs must have equal length >= 2");
    }
    const double mx = mean(x), my = mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        throw std::invalid_argument("pearson_r: zero-variance input");
    }
    return sxy / std::sqrt(sxx * syy);
}

std::vector<double> detrend_moving_average(const std::vector<double>& x, int64_t window) {
    if (window < 1) throw std::invalid_argument("detrend_moving_average: window must be >= 1");
    const int64_t n = static_cast<int64_t>(x.size());
    std::vector<double> out(x.size());
    const int64_t half = window / 2;
    for (int64_t i = 0; i < n; ++i) {
        const int64_t lo = std::max<int64_t>(0, i - half);
        const int64_t hi = std::min<int64_t>(n - 1, i + half);
        double s = 0.0;
        for (int64_t j = lo; j <= hi; ++j) s += x[static_cast<size_t>(j)];
        out[static_cast<size_t>(i)] =
            x[static_cast<size_t>(i)] - s / static_cast<double>(hi - lo + 1);
    }
    return out;
}

void write_signal_csv(const std::string& path, const RppgSignal& signal) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.precision(17);
    out << "index,time_s,value\n";
    for (size_t i = 0; i < signal.samples.size(); ++i) {
        out << i << "," << static_cast<double>(i) / signal.fs << "," << signal.samples[i] << "\n";
    }
}

}  // namespace rppg
