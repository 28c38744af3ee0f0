#include "rppg/clipio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "rppg/errors.hpp"
#include "rppg/skinlabel.hpp"

namespace fs = std::filesystem;

namespace rppg {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::istringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, sep)) {
        tok = trim(tok);
        if (!tok.empty()) out.push_back(tok);
    }
    return out;
}

}  // namespace

std::string ClipManifest::resolve(const std::string& rel) const {
    if (rel.empty() || rel.front() == '/') return rel;
    if (base_dir.empty()) return rel;
    return (fs::path(base_dir) / rel).string();
}

ClipManifest read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest " + path);
    ClipManifest m;
    m.base_dir = fs::path(path).parent_path().string();
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw IoError("manifest " + path + ": malformed line: " + line);
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "clip") {
            m.clip_path = value;
        } else if (key == "frames") {
            m.frame_files = split(value, ',');
        } else if (key == "fps") {
            m.fps = std::stod(value);
        } else if (key == "crop") {
            if (value != "full") {
                std::istringstream cs(value);
                if (!(cs >> m.crop.x >> m.crop.y >> m.crop.w >> m.crop.h)) {
                    throw IoError("manifest " + path + ": bad crop: " + value);
                }
            }
        } else if (key == "landmarks") {
            m.landmark_path = value;
        } else if (key == "landmark_map") {
            m.landmark_map_path = value;
        } else if (key == "ppg") {
            m.ppg_path = value;
        } else if (key == "masks") {
            m.mask_path = value;
        } else if (key == "hr") {
            m.hr_bpm = std::stod(value);
        } else if (key == "hr_file") {
            m.hr_path = value;
        } else {
            throw IoError("manifest " + path + ": unknown key: " + key);
        }
    }
    if (m.fps <= 0.0) throw IoError("manifest " + path + ": fps must be > 0");
    if (m.clip_path.empty() && m.frame_files.empty()) {
        throw IoError("manifest " + path + ": needs a clip or a frame list");
    }
    return m;
}

void write_manifest(const std::string& path, const ClipManifest& manifest) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.precision(17);
    if (!manifest.clip_path.empty()) out << "clip = " << manifest.clip_path << "\n";
    if (!manifest.frame_files.empty()) {
        out << "frames = ";
        for (size_t i = 0; i < manifest.frame_files.size(); ++i) {
            if (i) out << ",";
            out << manifest.frame_files[i];
        }
        out << "\n";
    }
    out << "fps = " << manifest.fps << "\n";
    if (!manifest.crop.full()) {
        out << "crop = " << manifest.crop.x << " " << manifest.crop.y << " " << manifest.crop.w
            << " " << manifest.crop.h << "\n";
    }
    if (!manifest.landmark_path.empty()) out << "landmarks = " << manifest.landmark_path << "\n";
    if (!manifest.landmark_map_path.empty()) {
        out << "landmark_map = " << manifest.landmark_map_path << "\n";
    }
    if (!manifest.ppg_path.empty()) out << "ppg = " << manifest.ppg_path << "\n";
    if (!manifest.mask_path.empty()) out << "masks = " << manifest.mask_path << "\n";
    if (manifest.hr_bpm > 0.0) out << "hr = " << manifest.hr_bpm << "\n";
    if (!manifest.hr_path.empty()) out << "hr_file = " << manifest.hr_path << "\n";
}

void save_clip_raw(const std::string& path, const VideoClip& clip, double fps_hint) {
    (void)fps_hint;
    if (clip.frames.rank() != 4 || clip.frames.dim(0) != 3) {
        throw std::invalid_argument("save_clip_raw: frames must be (3,T,H,W)");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.write("RPPGVID1", 8);
    const uint32_t dims[4] = {
        static_cast<uint32_t>(clip.frames.dim(0)), static_cast<uint32_t>(clip.frames.dim(1)),
        static_cast<uint32_t>(clip.frames.dim(2)), static_cast<uint32_t>(clip.frames.dim(3))};
    out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    out.write(reinterpret_cast<const char*>(clip.frames.data()),
              static_cast<std::streamsize>(clip.frames.numel() * sizeof(double)));
    if (!out) throw IoError("write failure on " + path);
}

VideoClip load_clip_raw(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::string(magic, 8) != "RPPGVID1") {
        throw IoError("clip " + path + ": bad magic");
    }
    uint32_t dims[4];
    in.read(reinterpret_cast<char*>(dims), sizeof(dims));
    if (!in || dims[0] != 3) throw IoError("clip " + path + ": bad header");
    VideoClip clip;
    clip.frames = Tensor(Shape{dims[0], dims[1], dims[2], dims[3]});
    in.read(reinterpret_cast<char*>(clip.frames.data()),
            static_cast<std::streamsize>(clip.frames.numel() * sizeof(double)));
    if (!in) throw IoError("clip " + path + ": truncated data");
    clip.source = path;
    return clip;
}

void write_ppm(const std::string& path, const Tensor& rgb) {
    if (rgb.rank() != 3 || rgb.dim(0) != 3) {
        throw std::invalid_argument("write_ppm: expected (3,H,W)");
    }
    const int64_t H = rgb.dim(1), W = rgb.dim(2);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "P6\n" << W << " " << H << "\n255\n";
    std::vector<uint8_t> row(static_cast<size_t>(3 * W));
    for (int64_t y = 0; y < H; ++y) {
        for (int64_t x = 0; x < W; ++x) {
            for (int64_t c = 0; c < 3; ++c) {
                const double v = std::clamp(rgb(c, y, x), 0.0, 1.0);
                row[static_cast<size_t>(3 * x + c)] =
                    static_cast<uint8_t>(std::lround(v * 255.0));
            }
        }
        out.write(reinterpret_cast<const char*>(row.data()), 3 * W);
    }
}

namespace {

void skip_ppm_whitespace(std::istream& in) {
    for (;;) {
        int c = in.peek();
        if (c == '#') {
            std::string comment;
            std::getline(in, comment);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            return;
        }
    }
}

}  // namespace

Tensor read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::string magic;
    in >> magic;
    if (magic != "P6") throw IoError("ppm " + path + ": unsupported format " + magic);
    skip_ppm_whitespace(in);
    int64_t w, h, maxval;
    in >> w;
    skip_ppm_whitespace(in);
    in >> h;
    skip_ppm_whitespace(in);
    in >> maxval;
    if (!in || w <= 0 || h <= 0 || maxval != 255) throw IoError("ppm " + path + ": bad header");
    in.get();  // the single whitespace after maxval
    std::vector<uint8_t> bytes(static_cast<size_t>(3 * w * h));
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!in) throw IoError("ppm " + path + ": truncated data");
    Tensor rgb(Shape{3, h, w});
    for (int64_t y = 0; y < h; ++y)
        for (int64_t x = 0; x < w; ++x)
            for (int64_t c = 0; c < 3; ++c) {
                rgb(c, y, x) =
                    static_cast<double>(bytes[static_cast<size_t>(3 * (y * w + x) + c)]) / 255.0;
            }
    return rgb;
}

PpgRecord read_ppg_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open ppg file " + path);
    PpgRecord out;
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) continue;
        try {
            const double t = std::stod(line.substr(0, comma));
            const double v = std::stod(line.substr(comma + 1));
            out.times.push_back(t);
            out.values.push_back(v);
        } catch (const std::exception&) {
            continue;  // header row
        }
    }
    if (out.times.size() < 2) throw IoError("ppg file " + path + ": too few samples");
    return out;
}

void write_ppg_csv(const std::string& path, const PpgRecord& ppg) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.precision(17);
    out << "time_s,value\n";
    for (size_t i = 0; i < ppg.times.size(); ++i) {
        out << ppg.times[i] << "," << ppg.values[i] << "\n";
    }
}

RppgSignal resample_ppg(const PpgRecord& ppg, double fps, int64_t frames) {
    if (fps <= 0.0) throw std::invalid_argument("resample_ppg: fps must be > 0");
    RppgSignal out;
    out.fs = fps;
    out.samples.resize(static_cast<size_t>(frames));
    const size_t n = ppg.times.size();
    for (int64_t i = 0; i < frames; ++i) {
        const double t = static_cast<double>(i) / fps;
        if (t <= ppg.times.front()) {
            out.samples[static_cast<size_t>(i)] = ppg.values.front();
            continue;
        }
        if (t >= ppg.times.back()) {
            out.samples[static_cast<size_t>(i)] = ppg.values.back();
            continue;
        }
        const auto it = std::upper_bound(ppg.times.begin(), ppg.times.end(), t);
        const size_t hi = static_cast<size_t>(it - ppg.times.begin());
        const size_t lo = hi - 1;
        const double span = ppg.times[hi] - ppg.times[lo];
        const double f = span > 0.0 ? (t - ppg.times[lo]) / span : 0.0;
        out.samples[static_cast<size_t>(i)] = (1.0 - f) * ppg.values[lo] + f * ppg.values[hi];
        (void)n;
    }
    return out;
}

double read_hr_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open hr file " + path);
    double hr;
    if (!(in >> hr)) throw IoError("hr file " + path + ": expected a single number");
    return hr;
}

void write_hr_file(const std::string& path, double hr_bpm) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.precision(17);
    out << hr_bpm << "\n";
}

namespace {

// bilinear resize of one (3,H,W) frame region into (3,outH,outW)
void resize_into(const Tensor& src, const CropBox& crop, Tensor& dst, int64_t frame,
                 int64_t out_h, int64_t out_w) {
    const int64_t H = src.dim(2), W = src.dim(3);
    const int64_t cx = crop.full() ? 0 : crop.x;
    const int64_t cy = crop.full() ? 0 : crop.y;
    const int64_t cw = crop.full() ? W : crop.w;
    const int64_t ch = crop.full() ? H : crop.h;
    const double sx = static_cast<double>(cw) / static_cast<double>(out_w);
    const double sy = static_cast<double>(ch) / static_cast<double>(out_h);
    for (int64_t c = 0; c < 3; ++c) {
        for (int64_t y = 0; y < out_h; ++y) {
            const double fy = (static_cast<double>(y) + 0.5) * sy - 0.5 + static_cast<double>(cy);
            const int64_t y0 = std::clamp<int64_t>(static_cast<int64_t>(std::floor(fy)), 0, H - 1);
            const int64_t y1 = std::min<int64_t>(y0 + 1, H - 1);
            const double wy = std::clamp(fy - static_cast<double>(y0), 0.0, 1.0);
            for (int64_t x = 0; x < out_w; ++x) {
                const double fx =
                    (static_cast<double>(x) + 0.5) * sx - 0.5 + static_cast<double>(cx);
                const int64_t x0 =
                    std::clamp<int64_t>(static_cast<int64_t>(std::floor(fx)), 0, W - 1);
                const int64_t x1 = std::min<int64_t>(x0 + 1, W - 1);
                const double wx = std::clamp(fx - static_cast<double>(x0), 0.0, 1.0);
                const double top = (1.0 - wx) * src(c, frame, y0, x0) + wx * src(c, frame, y0, x1);
                const double bot = (1.0 - wx) * src(c, frame, y1, x0) + wx * src(c, frame, y1, x1);
                dst(c, frame, y, x) = (1.0 - wy) * top + wy * bot;
            }
        }
    }
}

}  // namespace

LoadedClip load_clip(const ClipManifest& manifest, int64_t T, int64_t H, int64_t W) {
    LoadedClip out;

    VideoClip raw;
    if (!manifest.clip_path.empty()) {
        raw = load_clip_raw(manifest.resolve(manifest.clip_path));
    } else {
        for (size_t i = 0; i < manifest.frame_files.size(); ++i) {
            const Tensor frame = read_ppm(manifest.resolve(manifest.frame_files[i]));
            if (raw.frames.empty()) {
                raw.frames = Tensor(Shape{3, static_cast<int64_t>(manifest.frame_files.size()),
                                          frame.dim(1), frame.dim(2)});
            }
            if (frame.dim(1) != raw.frames.dim(2) || frame.dim(2) != raw.frames.dim(3)) {
                throw IoError("frame " + manifest.frame_files[i] + " has inconsistent size");
            }
            for (int64_t c = 0; c < 3; ++c)
                for (int64_t y = 0; y < frame.dim(1); ++y)
                    for (int64_t x = 0; x < frame.dim(2); ++x)
                        raw.frames(c, static_cast<int64_t>(i), y, x) = frame(c, y, x);
        }
    }
    raw.fps = manifest.fps;

    const int64_t available = raw.length();
    if (available < T) {
        throw IoError("clip has " + std::to_string(available) + " frames, need " +
                      std::to_string(T));
    }
    if (!manifest.crop.full()) {
        if (manifest.crop.x < 0 || manifest.crop.y < 0 ||
            manifest.crop.x + manifest.crop.w > raw.frames.dim(3) ||
            manifest.crop.y + manifest.crop.h > raw.frames.dim(2)) {
            throw IoError("crop box exceeds the frame bounds");
        }
    }

    out.clip.frames = Tensor(Shape{3, T, H, W});
    out.clip.fps = manifest.fps;
    out.clip.source = manifest.clip_path;
    for (int64_t t = 0; t < T; ++t) {
        // resize_into reads frame t of the raw stack
        resize_into(raw.frames, manifest.crop, out.clip.frames, t, H, W);
    }

    if (!manifest.ppg_path.empty()) {
        out.ppg = resample_ppg(read_ppg_csv(manifest.resolve(manifest.ppg_path)), manifest.fps, T);
    }
    out.hr_bpm = manifest.hr_bpm;
    if (out.hr_bpm <= 0.0 && !manifest.hr_path.empty()) {
        out.hr_bpm = read_hr_file(manifest.resolve(manifest.hr_path));
    }
    if (!manifest.landmark_path.empty()) {
        out.seeds = read_seed_csv(manifest.resolve(manifest.landmark_path),
                                  manifest.landmark_map_path.empty()
                                      ? ""
                                      : manifest.resolve(manifest.landmark_map_path));
    }
    if (!manifest.mask_path.empty()) {
        out.masks = load_masks(manifest.resolve(manifest.mask_path));
    }
    return out;
}

std::vector<Image> clip_to_gray(const VideoClip& clip) {
    const int64_t T = clip.frames.dim(1), H = clip.frames.dim(2), W = clip.frames.dim(3);
    std::vector<Image> out;
    out.reserve(static_cast<size_t>(T));
    for (int64_t t = 0; t < T; ++t) {
        Image g(H, W);
        for (int64_t y = 0; y < H; ++y)
            for (int64_t x = 0; x < W; ++x) {
                g.at(y, x) = 0.299 * clip.frames(0, t, y, x) + 0.587 * clip.frames(1, t, y, x) +
                             0.114 * clip.frames(2, t, y, x);
            }
        out.push_back(std::move(g));
    }
    return out;
}

std::vector<VideoClip> segment_clips(const VideoClip& clip, int64_t T, int64_t stride) {
    if (T < 1 || stride < 1) throw std::invalid_argument("segment_clips: bad T or stride");
    const int64_t total = clip.length();
    if (T > total) {
        throw std::invalid_argument("segment_clips: window " + std::to_string(T) +
                                    " exceeds clip length " + std::to_string(total));
    }
    const int64_t H = clip.frames.dim(2), W = clip.frames.dim(3);
    std::vector<VideoClip> out;
    for (int64_t start = 0; start + T <= total; start += stride) {
        VideoClip seg;
        seg.fps = clip.fps;
        seg.source = clip.source;
        seg.frames = Tensor(Shape{3, T, H, W});
        for (int64_t c = 0; c < 3; ++c) {
            const double* src = clip.frames.data() + (c * total + start) * H * W;
            std::copy(src, src + T * H * W, seg.frames.data() + c * T * H * W);
        }
        out.push_back(std::move(seg));
    }
    return out;
}

}  // namespace rppg
