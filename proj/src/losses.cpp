#include "rppg/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "rppg/dsp.hpp"

namespace rppg {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kBceClamp = 1e-7;

bool near_constant(double sum_sq, double m, size_t n) {
    const double std_dev = std::sqrt(sum_sq / static_cast<double>(n));
    return std_dev <= 1e-12 * (1.0 + std::abs(m));
}

}  // namespace

SignalLoss pearson_loss(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw std::invalid_argument("pearson_loss: inputs must have equal length >= 2");
    }
    const size_t n = x.size();
    const double mx = mean(x), my = mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }

    SignalLoss out;
    out.grad.assign(n, 0.0);
    if (near_constant(sxx, mx, n) || near_constant(syy, my, n)) {
        out.value = 1.0;
        out.degenerate = true;
        return out;
    }

    const double denom = std::sqrt(sxx * syy);
    const double r = sxy / denom;
    out.value = 1.0 - r;
    // dr/dx_i = (y_i - my - (sxy/sxx)(x_i - mx)) / denom; centering makes the
    // mean-projection term vanish.
    const double k = sxy / sxx;
    for (size_t i = 0; i < n; ++i) {
        out.grad[i] = -((y[i] - my) - k * (x[i] - mx)) / denom;
    }
    return out;
}

SignalLoss frequency_ce_loss(const std::vector<double>& x, double fs, double hr_gt,
                             FreqLogits logits) {
    const double f_target = hr_gt / 60.0;
    if (f_target < kBandLowHz || f_target > kBandHighHz) {
        throw std::invalid_argument("frequency_ce_loss: hr_gt " + std::to_string(hr_gt) +
                                    " bpm is outside the physiological band");
    }
    const Spectrum spec = psd(x, fs);
    const auto bins = band_bins(spec);
    if (bins.empty()) {
        throw std::invalid_argument("frequency_ce_loss: signal too short for any in-band bin");
    }

    // class index: band bin nearest to the ground-truth frequency
    size_t target = 0;
    double best = std::abs(spec.freqs[static_cast<size_t>(bins[0])] - f_target);
    for (size_t j = 1; j < bins.size(); ++j) {
        const double d = std::abs(spec.freqs[static_cast<size_t>(bins[j])] - f_target);
        if (d < best) {
            best = d;
            target = j;
        }
    }

    const size_t nb = bins.size();
    std::vector<double> z(nb);
    for (size_t j = 0; j < nb; ++j) {
        const double p = spec.power[static_cast<size_t>(bins[j])];
        z[j] = (logits == FreqLogits::RawPsd) ? p : std::log(p + 1e-12);
    }

    const double zmax = *std::max_element(z.begin(), z.end());
    double sum_exp = 0.0;
    for (double v : z) sum_exp += std::exp(v - zmax);
    const double log_sum = zmax + std::log(sum_exp);

    SignalLoss out;
    out.value = log_sum - z[target];

    // chain: dL/dz_j = softmax_j - one_hot, through the PSD to the signal
    const size_t n = x.size();
    const double mx = mean(x);
    std::vector<double> centered(n);
    for (size_t i = 0; i < n; ++i) centered[i] = x[i] - mx;
    const auto fx = dft_real(centered);

    std::vector<double> grad_tilde(n, 0.0);
    for (size_t j = 0; j < nb; ++j) {
        double coeff = std::exp(z[j] - log_sum) - (j == target ? 1.0 : 0.0);
        const size_t k = static_cast<size_t>(bins[j]);
        if (logits == FreqLogits::LogPsd) {
            coeff /= spec.power[k] + 1e-12;
        }
        const double re = fx[k].real(), im = fx[k].imag();
        const double scale = 2.0 * coeff / static_cast<double>(n);
        for (size_t m = 0; m < n; ++m) {
            const double ang = 2.0 * kPi * static_cast<double>(k * m % n) / static_cast<double>(n);
            grad_tilde[m] += scale * (re * std::cos(ang) - im * std::sin(ang));
        }
    }
    // centering projection: d centered_m / d x_i = delta - 1/n
    const double gmean = mean(grad_tilde);
    out.grad.resize(n);
    for (size_t i = 0; i < n; ++i) out.grad[i] = grad_tilde[i] - gmean;
    return out;
}

MaskLoss skin_bce_loss(const Tensor& skin_map, const Tensor& skin_label) {
    if (!skin_map.same_shape(skin_label)) {
        throw std::invalid_argument("skin_bce_loss: map shape " +
                                    shape_to_string(skin_map.shape()) + " != label shape " +
                                    shape_to_string(skin_label.shape()));
    }
    const int64_t n = skin_map.numel();
    MaskLoss out;
    out.grad = Tensor(skin_map.shape());
    double acc = 0.0;
    const double inv_n = 1.0 / static_cast<double>(n);
    for (int64_t i = 0; i < n; ++i) {
        const double label = skin_label[i];
        if (label < 0.0 || label > 1.0) {
            throw std::invalid_argument("skin_bce_loss: label outside [0,1]");
        }
        const double raw = skin_map[i];
        const double p = std::clamp(raw, kBceClamp, 1.0 - kBceClamp);
        acc += -(label * std::log(p) + (1.0 - label) * std::log(1.0 - p));
        if (raw > kBceClamp && raw < 1.0 - kBceClamp) {
            out.grad[i] = inv_n * (-label / p + (1.0 - label) / (1.0 - p));
        }
    }
    out.value = acc * inv_n;
    return out;
}

double total_loss(double pearson, double frequency, double skin, const LossWeights& w) {
    return w.alpha * pearson + frequency + w.beta * skin;
}

}  // namespace rppg
