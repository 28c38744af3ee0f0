#pragma once

#include <cstdint>
#include <vector>

#include "rppg/tensor.hpp"

namespace rppg {

struct LossWeights {
    double alpha = 1.0;
    double beta = 0.5;
};

struct SignalLoss {
    double value = 0.0;
    std::vector<double> grad;   // d value / d prediction
    bool degenerate = false;    // zero-variance fallback taken
};

// 1 - r(x, y), in [0, 2]. A constant x or y has no defined correlation; the
// loss falls back to 1 (zero gradient) and sets the degenerate flag so early
// near-constant predictions do not kill training.
SignalLoss pearson_loss(const std::vector<double>& x, const std::vector<double>& y);

enum class FreqLogits { RawPsd, LogPsd };

// Cross-entropy over the in-band PSD bins of x, scored against the bin whose
// frequency is nearest to hr_gt / 60 Hz. PSD values act as the logits.
SignalLoss frequency_ce_loss(const std::vector<double>& x, double fs, double hr_gt,
                             FreqLogits logits = FreqLogits::RawPsd);

struct MaskLoss {
    double value = 0.0;
    Tensor grad;  // d value / d prediction, same shape as the mask
};

// Mean binary cross-entropy with probabilities clamped to [1e-7, 1 - 1e-7].
MaskLoss skin_bce_loss(const Tensor& skin_map, const Tensor& skin_label);

// alpha * L_r + L_f + beta * L_s
double total_loss(double pearson, double frequency, double skin, const LossWeights& w);

}  // namespace rppg
