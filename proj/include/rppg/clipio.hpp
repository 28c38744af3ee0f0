#pragma once

#include <string>
#include <vector>

#include "rppg/dsp.hpp"
#include "rppg/image.hpp"
#include "rppg/optflow.hpp"
#include "rppg/tensor.hpp"

namespace rppg {

// Frame stack in [0,1], channel-major.
struct VideoClip {
    Tensor frames;  // (3, T, H, W)
    double fps = 0.0;
    std::string source;

    int64_t length() const { return frames.empty() ? 0 : frames.dim(1); }
};

struct CropBox {
    int64_t x = 0, y = 0, w = 0, h = 0;
    bool full() const { return w == 0 || h == 0; }
};

// Structured text manifest, "key = value" lines; all paths relative to the
// manifest location.
struct ClipManifest {
    std::string clip_path;                 // raw container, or
    std::vector<std::string> frame_files;  // ordered PPM list
    double fps = 0.0;
    CropBox crop;
    std::string landmark_path;
    std::string landmark_map_path;
    std::string ppg_path;
    std::string mask_path;
    std::string hr_path;
    double hr_bpm = 0.0;  // inline value wins over hr_path
    std::string base_dir;

    std::string resolve(const std::string& rel) const;
};

ClipManifest read_manifest(const std::string& path);
void write_manifest(const std::string& path, const ClipManifest& manifest);

// Raw planar clip container: magic "RPPGVID1", u32 C,T,H,W little-endian,
// then C*T*H*W doubles row-major. Lossless at stored precision.
void save_clip_raw(const std::string& path, const VideoClip& clip, double fps_hint = 0.0);
VideoClip load_clip_raw(const std::string& path);

// 8-bit binary PPM (P6) one frame at a time; values scaled to [0,1] on read.
void write_ppm(const std::string& path, const Tensor& rgb);  // (3, H, W)
Tensor read_ppm(const std::string& path);

// PPG ground truth CSV, rows "time_s,value".
struct PpgRecord {
    std::vector<double> times;
    std::vector<double> values;
};
PpgRecord read_ppg_csv(const std::string& path);
void write_ppg_csv(const std::string& path, const PpgRecord& ppg);

// Linear-interpolation resample onto the clip's frame timestamps t/fps.
RppgSignal resample_ppg(const PpgRecord& ppg, double fps, int64_t frames);

double read_hr_file(const std::string& path);
void write_hr_file(const std::string& path, double hr_bpm);

struct LoadedClip {
    VideoClip clip;
    RppgSignal ppg;               // aligned, length T; empty if no ppg file
    double hr_bpm = 0.0;
    std::vector<Point2d> seeds;   // empty if no landmark file
    Tensor masks;                 // empty if no mask file
};

// Crop, bilinear-resize to H x W, truncate to T frames, align the PPG.
LoadedClip load_clip(const ClipManifest& manifest, int64_t T, int64_t H, int64_t W);

// Grayscale frames (luma weights) for the tracker.
std::vector<Image> clip_to_gray(const VideoClip& clip);

// Sliding T-frame windows at the given stride.
std::vector<VideoClip> segment_clips(const VideoClip& clip, int64_t T, int64_t stride);

}  // namespace rppg
