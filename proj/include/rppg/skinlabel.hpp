#pragma once

#include <string>
#include <vector>

#include "rppg/optflow.hpp"
#include "rppg/tensor.hpp"

namespace rppg {

// Per-frame binary masks (values exactly 0 or 1) plus the block-averaged
// variant at the skin-map resolution.
struct SkinLabel {
    Tensor masks;        // (T, H, W), values in {0, 1}
    Tensor downsampled;  // (T/4, H/8, W/8), block means in [0, 1]
};

// Pixels whose centers fall inside the closed polygon through the ordered
// landmarks are 1. Even-odd scanline fill. Throws on degenerate (zero-area)
// polygons, naming the frame.
Tensor rasterize_skin(const LandmarkTrack& track, int64_t height, int64_t width);

// Block mean over t_factor x s_factor x s_factor cells; dims must divide.
Tensor downsample_label(const Tensor& masks, int64_t t_factor = 4, int64_t s_factor = 8);

// track_landmarks + rasterize_skin + downsample_label.
SkinLabel generate_labels(const std::vector<Image>& frames, const std::vector<Point2d>& seeds,
                          const FlowParams& params);

// Mask container: magic "RPPGMSK1", u32 T,H,W little-endian, then T*H*W bytes
// in {0,1}. PGM export writes one P5 file per frame at 0/255.
void save_masks(const std::string& path, const Tensor& masks);
Tensor load_masks(const std::string& path);
void export_masks_pgm(const std::string& dir_prefix, const Tensor& masks);

}  // namespace rppg
