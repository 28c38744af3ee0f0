#pragma once

#include <cstdint>
#include <string>

#include "rppg/clipio.hpp"
#include "rppg/optflow.hpp"

namespace rppg {

// Synthetic pulsatile face-blob clip. An elliptical skin region carries a
// pulse waveform (fundamental plus a 0.3-amplitude second harmonic); the
// background is textured and can carry its own distractor modulation. Drift
// translates the region and its landmark ring together, sub-pixel.
struct SynthSpec {
    double hr_bpm = 72.0;
    double fps = 30.0;
    int64_t frames = 450;
    int64_t height = 112;
    int64_t width = 112;

    double face_radius_frac = 0.30;  // ellipse x-radius over min(H, W)
    double face_aspect = 1.2;        // y-radius over x-radius

    // pulsatile amplitude per channel (relative modulation of the skin tone)
    double amp_r = 0.0033;
    double amp_g = 0.0077;
    double amp_b = 0.0051;
    double pulse_scale = 1.0;

    double noise_std = 0.0;           // additive Gaussian per pixel
    double drift_px_per_frame = 0.0;  // face translation speed
    double drift_angle_rad = 0.0;

    double flicker_amp = 0.0;  // global multiplicative modulation (R=G=B)
    double flicker_hz = 0.0;
    double bg_flicker_amp = 0.0;  // background-only distractor modulation
    double bg_flicker_hz = 0.0;

    void validate() const;
};

struct SyntheticClip {
    VideoClip clip;
    RppgSignal ppg;           // ground-truth waveform, length T, fs = fps
    double hr_bpm = 0.0;
    LandmarkTrack landmarks;  // exact ring positions per frame

    std::vector<Point2d> seeds() const { return landmarks.positions.front(); }
};

SyntheticClip generate_synthetic(const SynthSpec& spec, uint64_t seed);

// Writes clip.rvid, ppg.csv, hr.txt, seed.csv, track_gt.csv and manifest.txt
// under out_dir; returns the manifest path.
std::string write_synthetic_dataset(const SynthSpec& spec, uint64_t seed,
                                    const std::string& out_dir);

}  // namespace rppg
