#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "rppg/clipio.hpp"
#include "rppg/dsp.hpp"

namespace rppg {

// Per-frame spatial mean of each color channel over the skin mask.
struct RgbTrace {
    std::vector<double> r, g, b;
    double fs = 0.0;

    int64_t length() const { return static_cast<int64_t>(r.size()); }
    const std::vector<double>& channel(int64_t c) const { return c == 0 ? r : (c == 1 ? g : b); }
};

// Throws with the frame index when a mask frame is empty.
RgbTrace roi_mean_trace(const VideoClip& clip, const Tensor& masks);

struct BaselineResult {
    RppgSignal signal;
    double hr_bpm = 0.0;
};

// Band-passed green channel.
RppgSignal green_signal(const RgbTrace& trace);
BaselineResult green_method(const RgbTrace& trace);

// Chrominance projection over Hann-weighted sliding windows (1.6 s, 50%
// overlap-add): X = 3R - 2G, Y = 1.5R + G - 1.5B on mean-normalized channels,
// S = X - (sigma_X / sigma_Y) Y.
RppgSignal chrom_signal(const RgbTrace& trace);
BaselineResult chrom_method(const RgbTrace& trace);

// Projection onto the plane orthogonal to [1,1,1] with alpha tuning, same
// windowing: S1 = G - B, S2 = G + B - 2R, h = S1 + (sigma_1 / sigma_2) S2.
RppgSignal pos_signal(const RgbTrace& trace);
BaselineResult pos_method(const RgbTrace& trace);

struct IcaResult {
    std::array<std::vector<double>, 3> components;
    int iterations = 0;
};

// Symmetric FastICA with a tanh contrast on whitened channels; deterministic
// seeded initialization. Throws ConvergenceError past max_iter.
IcaResult fastica3(const std::array<std::vector<double>, 3>& channels, uint64_t seed,
                   double tol = 1e-6, int max_iter = 500);

// Channels centered and decorrelated to identity covariance.
std::array<std::vector<double>, 3> whiten3(const std::array<std::vector<double>, 3>& channels);

// Detrend + z-score + FastICA; the component with the strongest in-band
// spectral peak carries the pulse.
BaselineResult ica_method(const RgbTrace& trace, uint64_t seed = 20200527);

}  // namespace rppg
