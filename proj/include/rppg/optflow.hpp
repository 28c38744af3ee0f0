#pragma once

#include <string>
#include <vector>

#include "rppg/image.hpp"

namespace rppg {

// Coarse-to-fine image pyramid; levels[0] is the original frame and each
// further level is the 2x2 box-filtered stride-2 reduction of the previous.
struct Pyramid {
    std::vector<Image> levels;  // size = level_count + 1
    int64_t level_count = 0;
};

struct FlowParams {
    int64_t window = 15;        // odd square window edge, px
    int64_t max_iterations = 20;
    double epsilon = 0.01;      // stop when ||delta d|| drops below, px
    int64_t levels = 3;
    double min_determinant = 1e-9;
};

struct FlowResult {
    Point2d v;                // tracked position in the next frame
    bool converged = false;
    double residual = 0.0;    // ||delta d|| of the final iteration
};

Pyramid build_pyramid(const Image& frame, int64_t levels);

// Iterative least-squares refinement per level, displacement doubled when
// descending; v = u + g0 + d0. A point that leaves the frame or lands on a
// singular gradient matrix comes back with converged = false and the last
// usable estimate.
FlowResult track_point(const Pyramid& prev, const Pyramid& next, Point2d u,
                       const FlowParams& params);

// Tracked 2-D points per frame, sub-pixel.
struct LandmarkTrack {
    std::vector<std::vector<Point2d>> positions;  // [frame][landmark]
    std::vector<std::vector<bool>> converged;

    int64_t frame_count() const { return static_cast<int64_t>(positions.size()); }
    int64_t point_count() const {
        return positions.empty() ? 0 : static_cast<int64_t>(positions[0].size());
    }
};

// Frame-to-frame chaining of track_point for every seed. Throws TrackingError
// naming the frame when more than half the points fail to converge there.
LandmarkTrack track_landmarks(const std::vector<Image>& frames,
                              const std::vector<Point2d>& seeds, const FlowParams& params);

inline constexpr int64_t kPeripheralLandmarkCount = 29;

// Seed CSV rows are "index,x,y". Without a map file the seed file must list
// exactly 29 landmarks in ring order; with a map file ("ring_pos,source_index"
// rows) the 29 are selected from an arbitrary landmark set.
std::vector<Point2d> read_seed_csv(const std::string& path, const std::string& map_path = "");
void write_seed_csv(const std::string& path, const std::vector<Point2d>& seeds);

void write_track_csv(const std::string& path, const LandmarkTrack& track);
LandmarkTrack read_track_csv(const std::string& path);

}  // namespace rppg
