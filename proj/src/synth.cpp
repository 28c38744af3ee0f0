#include "rppg/synth.hpp"

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <stdexcept>

#include "rppg/errors.hpp"

namespace fs = std::filesystem;

namespace rppg {

namespace {

constexpr double kPi = std::numbers::pi;

// skin tone and background base colors
constexpr double kSkin[3] = {0.72, 0.50, 0.42};
constexpr double kBackground[3] = {0.34, 0.37, 0.42};

// fixed facial texture spots (face-relative units of the ellipse radii)
struct Spot {
    double x, y, sigma, depth;
};
constexpr Spot kSpots[] = {
    {-0.38, -0.25, 0.16, 0.35},  // left eye
    {0.38, -0.25, 0.16, 0.35},   // right eye
    {0.0, 0.12, 0.12, 0.20},     // nose
    {0.0, 0.55, 0.22, 0.25},     // mouth
};

double smoothstep(double e0, double e1, double x) {
    const double t = std::clamp((x - e0) / (e1 - e0), 0.0, 1.0);
    return t * t * (3.0 - 2.0 * t);
}

// deterministic static background texture
double hash_noise(int64_t x, int64_t y) {
    uint64_t h = static_cast<uint64_t>(x) * 0x9E3779B97F4A7C15ull +
                 static_cast<uint64_t>(y) * 0xBF58476D1CE4E5B9ull;
    h ^= h >> 31;
    h *= 0x94D049BB133111EBull;
    h ^= h >> 29;
    return (static_cast<double>(h & 0xFFFFFFull) / double(0xFFFFFF) - 0.5);
}

}  // namespace

void SynthSpec::validate() const {
    if (hr_bpm < 42.0 || hr_bpm > 240.0) {
        throw std::invalid_argument("synth: hr must be in [42, 240] bpm");
    }
    if (fps <= 0.0 || frames < 2 || height < 8 || width < 8) {
        throw std::invalid_argument("synth: bad clip geometry");
    }
    if (std::abs(amp_r * pulse_scale) >= 0.5 || std::abs(amp_g * pulse_scale) >= 0.5 ||
        std::abs(amp_b * pulse_scale) >= 0.5) {
        throw std::invalid_argument("synth: pulsatile amplitude must stay well below 1");
    }
    const double travel =
        std::abs(drift_px_per_frame) * static_cast<double>(frames);
    const double rx = face_radius_frac * static_cast<double>(std::min(height, width));
    const double margin = static_cast<double>(std::min(height, width)) / 2.0 - rx * face_aspect;
    if (drift_px_per_frame != 0.0 && travel > margin - 2.0) {
        throw std::invalid_argument("synth: drift would push the face out of frame");
    }
}

SyntheticClip generate_synthetic(const SynthSpec& spec, uint64_t seed) {
    spec.validate();
    const int64_t T = spec.frames, H = spec.height, W = spec.width;
    const double f_pulse = spec.hr_bpm / 60.0;
    const double rx = spec.face_radius_frac * static_cast<double>(std::min(H, W));
    const double ry = rx * spec.face_aspect;
    const double cx0 = static_cast<double>(W - 1) / 2.0;
    const double cy0 = static_cast<double>(H - 1) / 2.0;
    const double edge = 1.5 / rx;  // soft rim, about 1.5 px

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    SyntheticClip out;
    out.hr_bpm = spec.hr_bpm;
    out.clip.fps = spec.fps;
    out.clip.source = "synthetic";
    out.clip.frames = Tensor(Shape{3, T, H, W});
    out.ppg.fs = spec.fps;
    out.ppg.samples.resize(static_cast<size_t>(T));
    out.landmarks.positions.resize(static_cast<size_t>(T));
    out.landmarks.converged.resize(static_cast<size_t>(T));

    for (int64_t t = 0; t < T; ++t) {
        const double time = static_cast<double>(t) / spec.fps;
        const double pulse =
            std::sin(2.0 * kPi * f_pulse * time) + 0.3 * std::sin(4.0 * kPi * f_pulse * time);
        // the recorded waveform is the modulation actually present
        out.ppg.samples[static_cast<size_t>(t)] = spec.pulse_scale * pulse;

        const double cx = cx0 + spec.drift_px_per_frame * static_cast<double>(t) *
                                    std::cos(spec.drift_angle_rad);
        const double cy = cy0 + spec.drift_px_per_frame * static_cast<double>(t) *
                                    std::sin(spec.drift_angle_rad);

        auto& ring = out.landmarks.positions[static_cast<size_t>(t)];
        ring.resize(static_cast<size_t>(kPeripheralLandmarkCount));
        out.landmarks.converged[static_cast<size_t>(t)].assign(
            static_cast<size_t>(kPeripheralLandmarkCount), true);
        for (int64_t i = 0; i < kPeripheralLandmarkCount; ++i) {
            const double phi =
                2.0 * kPi * static_cast<double>(i) / static_cast<double>(kPeripheralLandmarkCount);
            ring[static_cast<size_t>(i)] = Point2d{cx + rx * std::cos(phi),
                                                   cy + ry * std::sin(phi)};
        }

        const double global_mod =
            1.0 + spec.flicker_amp * std::sin(2.0 * kPi * spec.flicker_hz * time);
        const double bg_mod =
            1.0 + spec.bg_flicker_amp * std::sin(2.0 * kPi * spec.bg_flicker_hz * time);
        const double skin_mod[3] = {
            1.0 + spec.amp_r * spec.pulse_scale * pulse,
            1.0 + spec.amp_g * spec.pulse_scale * pulse,
            1.0 + spec.amp_b * spec.pulse_scale * pulse,
        };

        for (int64_t y = 0; y < H; ++y) {
            for (int64_t x = 0; x < W; ++x) {
                const double dx = (static_cast<double>(x) - cx) / rx;
                const double dy = (static_cast<double>(y) - cy) / ry;
                const double rho = std::sqrt(dx * dx + dy * dy);
                const double inside = 1.0 - smoothstep(1.0 - edge, 1.0 + edge, rho);

                // face shading with fixed feature spots riding along
                double shade = 1.0 - 0.15 * rho * rho;
                for (const Spot& s : kSpots) {
                    const double sx = dx - s.x, sy = dy - s.y;
                    shade *= 1.0 - s.depth * std::exp(-(sx * sx + sy * sy) /
                                                      (2.0 * s.sigma * s.sigma));
                }

                const double gradient =
                    0.85 + 0.15 * std::sin(2.0 * kPi * static_cast<double>(x) /
                                           static_cast<double>(W)) *
                               std::cos(2.0 * kPi * static_cast<double>(y) /
                                        static_cast<double>(H));
                const double texture = 1.0 + 0.10 * hash_noise(x, y);

                for (int64_t c = 0; c < 3; ++c) {
                    const double skin = kSkin[c] * shade * skin_mod[c];
                    const double bg = kBackground[c] * gradient * texture * bg_mod;
                    double v = (inside * skin + (1.0 - inside) * bg) * global_mod;
                    if (spec.noise_std > 0.0) v += spec.noise_std * gauss(rng);
                    out.clip.frames(c, t, y, x) = std::clamp(v, 0.0, 1.0);
                }
            }
        }
    }
    return out;
}

std::string write_synthetic_dataset(const SynthSpec& spec, uint64_t seed,
                                    const std::string& out_dir) {
    fs::create_directories(out_dir);
    const SyntheticClip synth = generate_synthetic(spec, seed);
    const fs::path dir(out_dir);

    save_clip_raw((dir / "clip.rvid").string(), synth.clip);

    PpgRecord ppg;
    ppg.times.resize(synth.ppg.samples.size());
    ppg.values = synth.ppg.samples;
    for (size_t i = 0; i < ppg.times.size(); ++i) {
        ppg.times[i] = static_cast<double>(i) / spec.fps;
    }
    write_ppg_csv((dir / "ppg.csv").string(), ppg);
    write_hr_file((dir / "hr.txt").string(), spec.hr_bpm);
    write_seed_csv((dir / "seed.csv").string(), synth.seeds());
    write_track_csv((dir / "track_gt.csv").string(), synth.landmarks);

    ClipManifest m;
    m.clip_path = "clip.rvid";
    m.fps = spec.fps;
    m.landmark_path = "seed.csv";
    m.ppg_path = "ppg.csv";
    m.hr_bpm = spec.hr_bpm;
    const std::string manifest_path = (dir / "manifest.txt").string();
    write_manifest(manifest_path, m);
    return manifest_path;
}

}  // namespace rppg
