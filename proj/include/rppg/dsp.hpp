#pragma once

#include <complex>
#include <cstdint>
#include <vector>

namespace rppg {

// Physiological heart-rate band, 42 to 240 bpm.
inline constexpr double kBandLowHz = 0.7;
inline constexpr double kBandHighHz = 4.0;

// Length-T real sequence with its sampling rate.
struct RppgSignal {
    std::vector<double> samples;
    double fs = 0.0;

    int64_t length() const { return static_cast<int64_t>(samples.size()); }
};

struct Spectrum {
    std::vector<double> freqs;  // Hz per bin, k * fs / N
    std::vector<double> power;  // |X_k|^2 / N, one-sided
    double fs = 0.0;
    int64_t n = 0;  // DFT length

    double bin_width_hz() const { return fs / static_cast<double>(n); }
};

// Radix-2 fast path for power-of-two lengths, direct summation otherwise.
std::vector<std::complex<double>> dft(const std::vector<std::complex<double>>& x, bool inverse);
std::vector<std::complex<double>> dft_real(const std::vector<double>& x);

enum class SpectralWindow { Rectangular, Hann };

// Mean-removed one-sided power spectral density.
Spectrum psd(const std::vector<double>& x, double fs,
             SpectralWindow window = SpectralWindow::Rectangular);
inline Spectrum psd(const RppgSignal& x, SpectralWindow window = SpectralWindow::Rectangular) {
    return psd(x.samples, x.fs, window);
}

// Indices of spectrum bins with f_lo <= freq <= f_hi.
std::vector<int64_t> band_bins(const Spectrum& s, double f_lo = kBandLowHz,
                               double f_hi = kBandHighHz);

// 60 x the frequency of the strongest in-band PSD bin. Throws NoSignalError
// when the band carries no power.
double estimate_hr(const std::vector<double>& x, double fs);
inline double estimate_hr(const RppgSignal& x) { return estimate_hr(x.samples, x.fs); }

// Zero-phase band filter via spectral masking: forward DFT, zero the
// out-of-band bins (both half-spectra), inverse DFT.
std::vector<double> bandpass(const std::vector<double>& x, double fs, double f_lo = kBandLowHz,
                             double f_hi = kBandHighHz);

// Sample Pearson correlation; throws std::invalid_argument on zero variance.
double pearson_r(const std::vector<double>& x, const std::vector<double>& y);

double mean(const std::vector<double>& x);
double variance(const std::vector<double>& x);  // biased, mean-removed

// Moving-average detrend: x minus its centered moving mean over `window` samples.
std::vector<double> detrend_moving_average(const std::vector<double>& x, int64_t window);

void write_signal_csv(const std::string& path, const RppgSignal& signal);

}  // namespace rppg
