#pragma once

#include <cstdint>
#include <vector>

namespace rppg {

// Grayscale frame, row-major doubles in [0,1]. Coordinates are (x, y) with
// x = column and y = row; the center of pixel (row r, col c) is (c, r).
struct Image {
    int64_t height = 0;
    int64_t width = 0;
    std::vector<double> pixels;

    Image() = default;
    Image(int64_t h, int64_t w) : height(h), width(w), pixels(static_cast<size_t>(h * w), 0.0) {}

    double& at(int64_t y, int64_t x) { return pixels[static_cast<size_t>(y * width + x)]; }
    double at(int64_t y, int64_t x) const { return pixels[static_cast<size_t>(y * width + x)]; }
};

// Bilinear sample with edge clamping.
double bilinear_sample(const Image& img, double x, double y);

struct Point2d {
    double x = 0.0;
    double y = 0.0;
};

}  // namespace rppg
