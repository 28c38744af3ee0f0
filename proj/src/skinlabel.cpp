#include "rppg/skinlabel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>

#include "rppg/errors.hpp"
#include "rppg/parallel.hpp"

namespace rppg {

namespace {

double polygon_area(const std::vector<Point2d>& poly) {
    double acc = 0.0;
    const size_t n = poly.size();
    for (size_t i = 0; i < n; ++i) {
        const auto& a = poly[i];
        const auto& b = poly[(i + 1) % n];
        acc += a.x * b.y - b.x * a.y;
    }
    return 0.5 * std::abs(acc);
}

// Even-odd fill of one frame; sampling at pixel centers (col + 0.5 is not
// used: landmark coordinates already address pixel centers, so the center of
// pixel (r, c) is exactly (c, r)).
void fill_polygon(const std::vector<Point2d>& poly, int64_t height, int64_t width, double* out) {
    const size_t n = poly.size();
    std::vector<double> xs;
    xs.reserve(n);
    for (int64_t row = 0; row < height; ++row) {
        const double y = static_cast<double>(row);
        xs.clear();
        for (size_t i = 0; i < n; ++i) {
            const Point2d& a = poly[i];
            const Point2d& b = poly[(i + 1) % n];
            // half-open vertical span so shared vertices count once
            if ((a.y <= y && b.y > y) || (b.y <= y && a.y > y)) {
                xs.push_back(a.x + (y - a.y) / (b.y - a.y) * (b.x - a.x));
            }
        }
        std::sort(xs.begin(), xs.end());
        for (size_t i = 0; i + 1 < xs.size(); i += 2) {
            // half-open [x0, x1) span keeps adjacent spans from double-counting
            const int64_t lo = std::max<int64_t>(0, static_cast<int64_t>(std::ceil(xs[i])));
            const int64_t hi = std::min<int64_t>(
                width - 1, static_cast<int64_t>(std::ceil(xs[i + 1])) - 1);
            for (int64_t col = lo; col <= hi; ++col) out[row * width + col] = 1.0;
        }
    }
}

}  // namespace

Tensor rasterize_skin(const LandmarkTrack& track, int64_t height, int64_t width) {
    const int64_t frames = track.frame_count();
    if (frames < 1) throw std::invalid_argument("rasterize_skin: empty track");
    if (track.point_count() < 3) {
        throw std::invalid_argument("rasterize_skin: need at least 3 landmarks");
    }
    const double min_area = 1e-9;
    for (int64_t t = 0; t < frames; ++t) {
        if (polygon_area(track.positions[static_cast<size_t>(t)]) <= min_area) {
            throw std::invalid_argument("rasterize_skin: degenerate polygon at frame " +
                                        std::to_string(t));
        }
    }

    Tensor masks(Shape{frames, height, width});
    parallel_for(frames, [&](int64_t t) {
        fill_polygon(track.positions[static_cast<size_t>(t)], height, width,
                     masks.data() + t * height * width);
    });
    return masks;
}

Tensor downsample_label(const Tensor& masks, int64_t t_factor, int64_t s_factor) {
    if (masks.rank() != 3) throw std::invalid_argument("downsample_label: masks must be rank 3");
    const int64_t T = masks.dim(0), H = masks.dim(1), W = masks.dim(2);
    if (T % t_factor != 0 || H % s_factor != 0 || W % s_factor != 0) {
        throw std::invalid_argument("downsample_label: dims " + shape_to_string(masks.shape()) +
                                    " not divisible by factors (" + std::to_string(t_factor) +
                                    "," + std::to_string(s_factor) + "," +
                                    std::to_string(s_factor) + ")");
    }
    const int64_t To = T / t_factor, Ho = H / s_factor, Wo = W / s_factor;
    Tensor out(Shape{To, Ho, Wo});
    const double inv = 1.0 / static_cast<double>(t_factor * s_factor * s_factor);
    for (int64_t to = 0; to < To; ++to)
        for (int64_t ho = 0; ho < Ho; ++ho)
            for (int64_t wo = 0; wo < Wo; ++wo) {
                double acc = 0.0;
                for (int64_t dt = 0; dt < t_factor; ++dt)
                    for (int64_t dh = 0; dh < s_factor; ++dh)
                        for (int64_t dw = 0; dw < s_factor; ++dw)
                            acc += masks(to * t_factor + dt, ho * s_factor + dh,
                                         wo * s_factor + dw);
                out(to, ho, wo) = acc * inv;
            }
    return out;
}

SkinLabel generate_labels(const std::vector<Image>& frames, const std::vector<Point2d>& seeds,
                          const FlowParams& params) {
    if (frames.empty()) throw std::invalid_argument("generate_labels: no frames");
    const LandmarkTrack track = track_landmarks(frames, seeds, params);
    SkinLabel label;
    label.masks = rasterize_skin(track, frames[0].height, frames[0].width);
    label.downsampled = downsample_label(label.masks);
    return label;
}

void save_masks(const std::string& path, const Tensor& masks) {
    if (masks.rank() != 3) throw std::invalid_argument("save_masks: masks must be rank 3");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.write("RPPGMSK1", 8);
    const uint32_t dims[3] = {static_cast<uint32_t>(masks.dim(0)),
                              static_cast<uint32_t>(masks.dim(1)),
                              static_cast<uint32_t>(masks.dim(2))};
    out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    std::vector<uint8_t> bytes(static_cast<size_t>(masks.numel()));
    for (int64_t i = 0; i < masks.numel(); ++i) bytes[static_cast<size_t>(i)] = masks[i] > 0.5;
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failure on " + path);
}

Tensor load_masks(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::string(magic, 8) != "RPPGMSK1") {
        throw IoError("mask file " + path + ": bad magic");
    }
    uint32_t dims[3];
    in.read(reinterpret_cast<char*>(dims), sizeof(dims));
    if (!in) throw IoError("mask file " + path + ": truncated header");
    Tensor masks(Shape{dims[0], dims[1], dims[2]});
    std::vector<uint8_t> bytes(static_cast<size_t>(masks.numel()));
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!in) throw IoError("mask file " + path + ": truncated data");
    for (int64_t i = 0; i < masks.numel(); ++i) {
        masks[i] = bytes[static_cast<size_t>(i)] ? 1.0 : 0.0;
    }
    return masks;
}

void export_masks_pgm(const std::string& dir_prefix, const Tensor& masks) {
    const int64_t T = masks.dim(0), H = masks.dim(1), W = masks.dim(2);
    for (int64_t t = 0; t < T; ++t) {
        char name[32];
        std::snprintf(name, sizeof(name), "mask_%05lld.pgm", static_cast<long long>(t));
        std::ofstream out(dir_prefix + name, std::ios::binary);
        if (!out) throw IoError("cannot open " + dir_prefix + name + " for writing");
        out << "P5\n" << W << " " << H << "\n255\n";
        std::vector<uint8_t> row(static_cast<size_t>(W));
        for (int64_t y = 0; y < H; ++y) {
            for (int64_t x = 0; x < W; ++x) {
                row[static_cast<size_t>(x)] = masks(t, y, x) > 0.5 ? 255 : 0;
            }
            out.write(reinterpret_cast<const char*>(row.data()), W);
        }
    }
}

}  // namespace rppg
