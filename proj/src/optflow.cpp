#include "rppg/optflow.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "rppg/errors.hpp"

namespace rppg {

double bilinear_sample(const Image& img, double x, double y) {
    x = std::clamp(x, 0.0, static_cast<double>(img.width - 1));
    y = std::clamp(y, 0.0, static_cast<double>(img.height - 1));
    const int64_t x0 = static_cast<int64_t>(std::floor(x));
    const int64_t y0 = static_cast<int64_t>(std::floor(y));
    const int64_t x1 = std::min(x0 + 1, img.width - 1);
    const int64_t y1 = std::min(y0 + 1, img.height - 1);
    const double fx = x - static_cast<double>(x0);
    const double fy = y - static_cast<double>(y0);
    const double top = (1.0 - fx) * img.at(y0, x0) + fx * img.at(y0, x1);
    const double bot = (1.0 - fx) * img.at(y1, x0) + fx * img.at(y1, x1);
    return (1.0 - fy) * top + fy * bot;
}

Pyramid build_pyramid(const Image& frame, int64_t levels) {
    if (levels < 1) throw std::invalid_argument("build_pyramid: need at least 1 level");
    Pyramid pyr;
    pyr.level_count = levels;
    pyr.levels.reserve(static_cast<size_t>(levels + 1));
    pyr.levels.push_back(frame);
    for (int64_t l = 1; l <= levels; ++l) {
        const Image& prev = pyr.levels.back();
        const int64_t h = (prev.height + 1) / 2;
        const int64_t w = (prev.width + 1) / 2;
        if (h < 2 || w < 2) {
            throw std::invalid_argument("build_pyramid: frame too small for " +
                                        std::to_string(levels) + " levels");
        }
        Image out(h, w);
        for (int64_t y = 0; y < h; ++y) {
            const int64_t y0 = 2 * y;
            const int64_t y1 = std::min(y0 + 1, prev.height - 1);
            for (int64_t x = 0; x < w; ++x) {
                const int64_t x0 = 2 * x;
                const int64_t x1 = std::min(x0 + 1, prev.width - 1);
                out.at(y, x) = 0.25 * (prev.at(y0, x0) + prev.at(y0, x1) + prev.at(y1, x0) +
                                       prev.at(y1, x1));
            }
        }
        pyr.levels.push_back(std::move(out));
    }
    return pyr;
}

namespace {

struct WindowBounds {
    int64_t x_lo, x_hi, y_lo, y_hi;  // inclusive offset range around the point
    // clipped windows still have to cover the point's own neighbourhood
    bool usable() const { return x_lo <= -1 && x_hi >= 1 && y_lo <= -1 && y_hi >= 1; }
};

// window offsets whose samples (and gradient neighbours) stay inside
WindowBounds clip_window(const Image& img, const Point2d& p, int64_t half) {
    WindowBounds b{};
    b.x_lo = std::max(-half, static_cast<int64_t>(std::ceil(1.0 - p.x)));
    b.x_hi = std::min(half, static_cast<int64_t>(
                                std::floor(static_cast<double>(img.width - 2) - p.x)));
    b.y_lo = std::max(-half, static_cast<int64_t>(std::ceil(1.0 - p.y)));
    b.y_hi = std::min(half, static_cast<int64_t>(
                                std::floor(static_cast<double>(img.height - 2) - p.y)));
    return b;
}

}  // namespace

FlowResult track_point(const Pyramid& prev, const Pyramid& next, Point2d u,
                       const FlowParams& params) {
    if (params.window < 3 || params.window % 2 == 0) {
        throw std::invalid_argument("track_point: window must be odd and >= 3");
    }
    const int64_t half = params.window / 2;
    const int64_t top = std::min<int64_t>(params.levels, prev.level_count);

    FlowResult result;
    double gx = 0.0, gy = 0.0;  // flow guess carried down the pyramid
    bool ok = true;
    double residual = 0.0;

    for (int64_t level = top; level >= 0; --level) {
        const Image& a = prev.levels[static_cast<size_t>(level)];
        const Image& b = next.levels[static_cast<size_t>(level)];
        const double scale = std::pow(2.0, static_cast<double>(level));
        const Point2d ul{u.x / scale, u.y / scale};

        const WindowBounds bounds = clip_window(a, ul, half);
        if (!bounds.usable()) {
            if (level > 0) {
                // level too coarse for the window: descend with the guess only
                gx *= 2.0;
                gy *= 2.0;
                continue;
            }
            ok = false;
            break;
        }

        // spatial gradient matrix over the (possibly clipped) window
        const int64_t wx_n = bounds.x_hi - bounds.x_lo + 1;
        const int64_t wy_n = bounds.y_hi - bounds.y_lo + 1;
        const int64_t n = wx_n * wy_n;
        std::vector<double> ix(static_cast<size_t>(n)), iy(static_cast<size_t>(n)),
            iv(static_cast<size_t>(n));
        double gxx = 0.0, gxy = 0.0, gyy = 0.0;
        int64_t idx = 0;
        for (int64_t wy = bounds.y_lo; wy <= bounds.y_hi; ++wy) {
            for (int64_t wx = bounds.x_lo; wx <= bounds.x_hi; ++wx, ++idx) {
                const double px = ul.x + static_cast<double>(wx);
                const double py = ul.y + static_cast<double>(wy);
                const double dx =
                    0.5 * (bilinear_sample(a, px + 1.0, py) - bilinear_sample(a, px - 1.0, py));
                const double dy =
                    0.5 * (bilinear_sample(a, px, py + 1.0) - bilinear_sample(a, px, py - 1.0));
                ix[static_cast<size_t>(idx)] = dx;
                iy[static_cast<size_t>(idx)] = dy;
                iv[static_cast<size_t>(idx)] = bilinear_sample(a, px, py);
                gxx += dx * dx;
                gxy += dx * dy;
                gyy += dy * dy;
            }
        }
        const double det = gxx * gyy - gxy * gxy;
        if (det < params.min_determinant) {
            ok = false;
            break;
        }
        const double inv00 = gyy / det, inv01 = -gxy / det, inv11 = gxx / det;

        double dx_acc = 0.0, dy_acc = 0.0;
        bool level_ok = false;
        for (int64_t iter = 0; iter < params.max_iterations; ++iter) {
            const Point2d moved{ul.x + gx + dx_acc, ul.y + gy + dy_acc};
            if (moved.x < 0.0 || moved.y < 0.0 ||
                moved.x > static_cast<double>(b.width - 1) ||
                moved.y > static_cast<double>(b.height - 1)) {
                ok = false;
                break;
            }
            double bx = 0.0, by = 0.0;
            idx = 0;
            for (int64_t wy = bounds.y_lo; wy <= bounds.y_hi; ++wy) {
                for (int64_t wx = bounds.x_lo; wx <= bounds.x_hi; ++wx, ++idx) {
                    const double di =
                        iv[static_cast<size_t>(idx)] -
                        bilinear_sample(b, moved.x + static_cast<double>(wx),
                                        moved.y + static_cast<double>(wy));
                    bx += di * ix[static_cast<size_t>(idx)];
                    by += di * iy[static_cast<size_t>(idx)];
                }
            }
            const double ddx = inv00 * bx + inv01 * by;
            const double ddy = inv01 * bx + inv11 * by;
            dx_acc += ddx;
            dy_acc += ddy;
            residual = std::sqrt(ddx * ddx + ddy * ddy);
            if (residual < params.epsilon) {
                level_ok = true;
                break;
            }
        }
        if (!ok) break;
        if (level > 0) {
            gx = 2.0 * (gx + dx_acc);
            gy = 2.0 * (gy + dy_acc);
        } else {
            gx += dx_acc;
            gy += dy_acc;
            ok = level_ok;
        }
    }

    result.v = Point2d{u.x + gx, u.y + gy};
    result.converged = ok;
    result.residual = residual;
    return result;
}

LandmarkTrack track_landmarks(const std::vector<Image>& frames, const std::vector<Point2d>& seeds,
                              const FlowParams& params) {
    if (frames.empty()) throw std::invalid_argument("track_landmarks: no frames");
    if (seeds.empty()) throw std::invalid_argument("track_landmarks: no seed points");
    const int64_t half = params.window / 2;
    for (size_t i = 0; i < seeds.size(); ++i) {
        if (!clip_window(frames[0], seeds[i], half).usable()) {
            throw std::invalid_argument("track_landmarks: seed " + std::to_string(i) +
                                        " too close to the frame border");
        }
    }

    LandmarkTrack track;
    track.positions.reserve(frames.size());
    track.converged.reserve(frames.size());
    track.positions.push_back(seeds);
    track.converged.emplace_back(seeds.size(), true);

    Pyramid prev = build_pyramid(frames[0], params.levels);
    for (size_t t = 1; t < frames.size(); ++t) {
        Pyramid next = build_pyramid(frames[t], params.levels);
        std::vector<Point2d> pts(seeds.size());
        std::vector<bool> conv(seeds.size());
        int64_t lost = 0;
        for (size_t i = 0; i < seeds.size(); ++i) {
            const FlowResult r = track_point(prev, next, track.positions.back()[i], params);
            pts[i] = r.v;
            conv[i] = r.converged;
            if (!r.converged) ++lost;
        }
        if (2 * lost > static_cast<int64_t>(seeds.size())) {
            throw TrackingError("track_landmarks: lost " + std::to_string(lost) + " of " +
                                    std::to_string(seeds.size()) + " points at frame " +
                                    std::to_string(t),
                                static_cast<int64_t>(t));
        }
        track.positions.push_back(std::move(pts));
        track.converged.push_back(std::move(conv));
        prev = std::move(next);
    }
    return track;
}

std::vector<Point2d> read_seed_csv(const std::string& path, const std::string& map_path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open seed file " + path);
    std::vector<std::pair<int64_t, Point2d>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::string tok;
        int64_t index;
        Point2d p;
        if (!std::getline(ss, tok, ',')) continue;
        if (tok.find_first_not_of("-0123456789 \t") != std::string::npos) continue;  // header
        index = std::stoll(tok);
        if (!std::getline(ss, tok, ',')) throw IoError("seed file " + path + ": bad row: " + line);
        p.x = std::stod(tok);
        if (!std::getline(ss, tok, ',')) throw IoError("seed file " + path + ": bad row: " + line);
        p.y = std::stod(tok);
        rows.emplace_back(index, p);
    }

    if (map_path.empty()) {
        if (rows.size() != static_cast<size_t>(kPeripheralLandmarkCount)) {
            throw IoError("seed file " + path + ": expected " +
                          std::to_string(kPeripheralLandmarkCount) + " landmarks, found " +
                          std::to_string(rows.size()));
        }
        std::vector<Point2d> seeds(rows.size());
        for (const auto& [idx, p] : rows) {
            if (idx < 0 || idx >= static_cast<int64_t>(rows.size())) {
                throw IoError("seed file " + path + ": index " + std::to_string(idx) +
                              " out of range");
            }
            seeds[static_cast<size_t>(idx)] = p;
        }
        return seeds;
    }

    // map file selects the peripheral ring out of a larger landmark set
    std::ifstream map_in(map_path);
    if (!map_in) throw IoError("cannot open landmark map " + map_path);
    std::vector<Point2d> seeds;
    while (std::getline(map_in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::string tok;
        if (!std::getline(ss, tok, ',')) continue;
        if (tok.find_first_not_of("-0123456789 \t") != std::string::npos) continue;
        std::getline(ss, tok, ',');
        const int64_t source = std::stoll(tok);
        const auto it = std::find_if(rows.begin(), rows.end(),
                                     [&](const auto& r) { return r.first == source; });
        if (it == rows.end()) {
            throw IoError("seed file " + path + ": landmark " + std::to_string(source) +
                          " required by the map is missing");
        }
        seeds.push_back(it->second);
    }
    if (seeds.size() != static_cast<size_t>(kPeripheralLandmarkCount)) {
        throw IoError("landmark map " + map_path + ": expected " +
                      std::to_string(kPeripheralLandmarkCount) + " entries, found " +
                      std::to_string(seeds.size()));
    }
    return seeds;
}

void write_seed_csv(const std::string& path, const std::vector<Point2d>& seeds) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.precision(17);
    out << "index,x,y\n";
    for (size_t i = 0; i < seeds.size(); ++i) {
        out << i << "," << seeds[i].x << "," << seeds[i].y << "\n";
    }
}

void write_track_csv(const std::string& path, const LandmarkTrack& track) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.precision(17);
    out << "frame,landmark,x,y,converged\n";
    for (size_t t = 0; t < track.positions.size(); ++t) {
        for (size_t i = 0; i < track.positions[t].size(); ++i) {
            out << t << "," << i << "," << track.positions[t][i].x << ","
                << track.positions[t][i].y << "," << (track.converged[t][i] ? 1 : 0) << "\n";
        }
    }
}

LandmarkTrack read_track_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open track file " + path);
    LandmarkTrack track;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::string tok;
        std::getline(ss, tok, ',');
        if (tok.find_first_not_of("0123456789 \t") != std::string::npos) continue;  // header
        const size_t frame = static_cast<size_t>(std::stoll(tok));
        std::getline(ss, tok, ',');
        const size_t landmark = static_cast<size_t>(std::stoll(tok));
        Point2d p;
        std::getline(ss, tok, ',');
        p.x = std::stod(tok);
        std::getline(ss, tok, ',');
        p.y = std::stod(tok);
        std::getline(ss, tok, ',');
        const bool conv = std::stoi(tok) != 0;
        if (track.positions.size() <= frame) {
            track.positions.resize(frame + 1);
            track.converged.resize(frame + 1);
        }
        if (track.positions[frame].size() <= landmark) {
            track.positions[frame].resize(landmark + 1);
            track.converged[frame].resize(landmark + 1);
        }
        track.positions[frame][landmark] = p;
        track.converged[frame][landmark] = conv;
    }
    return track;
}

}  // namespace rppg
