#include "rppg/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "rppg/errors.hpp"

namespace rppg {

namespace {

constexpr double kPi = std::numbers::pi;

double window_mean(const std::vector<double>& x, int64_t start, int64_t len) {
    double s = 0.0;
    for (int64_t i = 0; i < len; ++i) s += x[static_cast<size_t>(start + i)];
    return s / static_cast<double>(len);
}

double stddev(const std::vector<double>& x) {
    double m = 0.0;
    for (double v : x) m += v;
    m /= static_cast<double>(x.size());
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return std::sqrt(s / static_cast<double>(x.size()));
}

// Hann-weighted overlap-add of per-window chrominance projections.
template <class WindowFn>
RppgSignal overlap_add(const RgbTrace& trace, WindowFn&& project) {
    const int64_t n = trace.length();
    int64_t win = static_cast<int64_t>(std::lround(1.6 * trace.fs));
    win = std::min(win, n);
    if (win < 4) throw std::invalid_argument("trace too short for windowed processing");
    const int64_t hop = std::max<int64_t>(1, win / 2);

    std::vector<double> acc(static_cast<size_t>(n), 0.0);
    std::vector<double> weight(static_cast<size_t>(n), 0.0);
    for (int64_t start = 0; start + win <= n; start += hop) {
        const std::vector<double> s = project(start, win);
        for (int64_t i = 0; i < win; ++i) {
            const double h =
                0.5 * (1.0 - std::cos(2.0 * kPi * static_cast<double>(i) /
                                      static_cast<double>(win - 1)));
            acc[static_cast<size_t>(start + i)] += h * s[static_cast<size_t>(i)];
            weight[static_cast<size_t>(start + i)] += h;
        }
        if (start + win == n) break;
    }

    RppgSignal out;
    out.fs = trace.fs;
    out.samples.resize(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) {
        out.samples[static_cast<size_t>(i)] =
            weight[static_cast<size_t>(i)] > 1e-12
                ? acc[static_cast<size_t>(i)] / weight[static_cast<size_t>(i)]
                : 0.0;
    }
    return out;
}

// 3x3 symmetric Jacobi eigendecomposition: A = V diag(eig) V^T.
void jacobi_eig3(const double a_in[9], double eig[3], double v[9]) {
    double a[9];
    std::copy(a_in, a_in + 9, a);
    for (int i = 0; i < 9; ++i) v[i] = (i % 4 == 0) ? 1.0 : 0.0;
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = std::abs(a[1]) + std::abs(a[2]) + std::abs(a[5]);
        if (off < 1e-15) break;
        for (int p = 0; p < 2; ++p) {
            for (int q = p + 1; q < 3; ++q) {
                const double apq = a[p * 3 + q];
                if (std::abs(apq) < 1e-18) continue;
                const double theta = (a[q * 3 + q] - a[p * 3 + p]) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < 3; ++k) {
                    const double akp = a[k * 3 + p], akq = a[k * 3 + q];
                    a[k * 3 + p] = c * akp - s * akq;
                    a[k * 3 + q] = s * akp + c * akq;
                }
                for (int k = 0; k < 3; ++k) {
                    const double apk = a[p * 3 + k], aqk = a[q * 3 + k];
                    a[p * 3 + k] = c * apk - s * aqk;
                    a[q * 3 + k] = s * apk + c * aqk;
                }
                for (int k = 0; k < 3; ++k) {
                    const double vkp = v[k * 3 + p], vkq = v[k * 3 + q];
                    v[k * 3 + p] = c * vkp - s * vkq;
                    v[k * 3 + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    for (int i = 0; i < 3; ++i) eig[i] = a[i * 3 + i];
}

// B = A^{-1/2} for symmetric positive definite 3x3 A
void inv_sqrt3(const double a[9], double b[9]) {
    double eig[3], v[9];
    jacobi_eig3(a, eig, v);
    for (int i = 0; i < 3; ++i) {
        if (eig[i] <= 1e-15) throw ConvergenceError("fastica: rank-deficient covariance");
    }
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double acc = 0.0;
            for (int k = 0; k < 3; ++k) {
                acc += v[i * 3 + k] * v[j * 3 + k] / std::sqrt(eig[k]);
            }
            b[i * 3 + j] = acc;
        }
}

}  // namespace

RgbTrace roi_mean_trace(const VideoClip& clip, const Tensor& masks) {
    if (masks.rank() != 3 || masks.dim(0) != clip.frames.dim(1) ||
        masks.dim(1) != clip.frames.dim(2) || masks.dim(2) != clip.frames.dim(3)) {
        throw std::invalid_argument("roi_mean_trace: mask shape " +
                                    shape_to_string(masks.shape()) +
                                    " does not match the clip frames");
    }
    const int64_t T = clip.frames.dim(1), H = clip.frames.dim(2), W = clip.frames.dim(3);
    RgbTrace trace;
    trace.fs = clip.fps;
    trace.r.resize(static_cast<size_t>(T));
    trace.g.resize(static_cast<size_t>(T));
    trace.b.resize(static_cast<size_t>(T));
    for (int64_t t = 0; t < T; ++t) {
        double sums[3] = {0.0, 0.0, 0.0};
        int64_t count = 0;
        for (int64_t y = 0; y < H; ++y)
            for (int64_t x = 0; x < W; ++x) {
                if (masks(t, y, x) > 0.5) {
                    ++count;
                    for (int64_t c = 0; c < 3; ++c) sums[c] += clip.frames(c, t, y, x);
                }
            }
        if (count == 0) {
            throw std::invalid_argument("roi_mean_trace: empty mask at frame " +
                                        std::to_string(t));
        }
        trace.r[static_cast<size_t>(t)] = sums[0] / static_cast<double>(count);
        trace.g[static_cast<size_t>(t)] = sums[1] / static_cast<double>(count);
        trace.b[static_cast<size_t>(t)] = sums[2] / static_cast<double>(count);
    }
    return trace;
}

RppgSignal green_signal(const RgbTrace& trace) {
    RppgSignal out;
    out.fs = trace.fs;
    out.samples = bandpass(trace.g, trace.fs);
    return out;
}

BaselineResult green_method(const RgbTrace& trace) {
    BaselineResult out;
    out.signal = green_signal(trace);
    out.hr_bpm = estimate_hr(out.signal);
    return out;
}

RppgSignal chrom_signal(const RgbTrace& trace) {
    RppgSignal raw = overlap_add(trace, [&](int64_t start, int64_t win) {
        const double mr = window_mean(trace.r, start, win);
        const double mg = window_mean(trace.g, start, win);
        const double mb = window_mean(trace.b, start, win);
        if (mr == 0.0 || mg == 0.0 || mb == 0.0) {
            throw std::invalid_argument("chrom_method: zero channel mean");
        }
        std::vector<double> xs(static_cast<size_t>(win)), ys(static_cast<size_t>(win));
        for (int64_t i = 0; i < win; ++i) {
            const double rn = trace.r[static_cast<size_t>(start + i)] / mr;
            const double gn = trace.g[static_cast<size_t>(start + i)] / mg;
            const double bn = trace.b[static_cast<size_t>(start + i)] / mb;
            xs[static_cast<size_t>(i)] = 3.0 * rn - 2.0 * gn;
            ys[static_cast<size_t>(i)] = 1.5 * rn + gn - 1.5 * bn;
        }
        const double sy = stddev(ys);
        const double alpha = sy > 1e-12 ? stddev(xs) / sy : 0.0;
        std::vector<double> s(static_cast<size_t>(win));
        double mean_s = 0.0;
        for (int64_t i = 0; i < win; ++i) {
            s[static_cast<size_t>(i)] =
                xs[static_cast<size_t>(i)] - alpha * ys[static_cast<size_t>(i)];
            mean_s += s[static_cast<size_t>(i)];
        }
        mean_s /= static_cast<double>(win);
        for (double& v : s) v -= mean_s;
        return s;
    });

    RppgSignal out;
    out.fs = trace.fs;
    out.samples = bandpass(raw.samples, trace.fs);
    return out;
}

BaselineResult chrom_method(const RgbTrace& trace) {
    BaselineResult out;
    out.signal = chrom_signal(trace);
    out.hr_bpm = estimate_hr(out.signal);
    return out;
}

RppgSignal pos_signal(const RgbTrace& trace) {
    RppgSignal raw = overlap_add(trace, [&](int64_t start, int64_t win) {
        const double mr = window_mean(trace.r, start, win);
        const double mg = window_mean(trace.g, start, win);
        const double mb = window_mean(trace.b, start, win);
        if (mr == 0.0 || mg == 0.0 || mb == 0.0) {
            throw std::invalid_argument("pos_method: zero channel mean");
        }
        std::vector<double> s1(static_cast<size_t>(win)), s2(static_cast<size_t>(win));
        for (int64_t i = 0; i < win; ++i) {
            const double rn = trace.r[static_cast<size_t>(start + i)] / mr;
            const double gn = trace.g[static_cast<size_t>(start + i)] / mg;
            const double bn = trace.b[static_cast<size_t>(start + i)] / mb;
            s1[static_cast<size_t>(i)] = gn - bn;
            s2[static_cast<size_t>(i)] = gn + bn - 2.0 * rn;
        }
        const double sd2 = stddev(s2);
        const double alpha = sd2 > 1e-12 ? stddev(s1) / sd2 : 0.0;
        std::vector<double> h(static_cast<size_t>(win));
        double mean_h = 0.0;
        for (int64_t i = 0; i < win; ++i) {
            h[static_cast<size_t>(i)] =
                s1[static_cast<size_t>(i)] + alpha * s2[static_cast<size_t>(i)];
            mean_h += h[static_cast<size_t>(i)];
        }
        mean_h /= static_cast<double>(win);
        for (double& v : h) v -= mean_h;
        return h;
    });

    RppgSignal out;
    out.fs = trace.fs;
    out.samples = bandpass(raw.samples, trace.fs);
    return out;
}

BaselineResult pos_method(const RgbTrace& trace) {
    BaselineResult out;
    out.signal = pos_signal(trace);
    out.hr_bpm = estimate_hr(out.signal);
    return out;
}

std::array<std::vector<double>, 3> whiten3(const std::array<std::vector<double>, 3>& channels) {
    const size_t n = channels[0].size();
    std::array<std::vector<double>, 3> centered;
    for (int c = 0; c < 3; ++c) {
        if (channels[static_cast<size_t>(c)].size() != n) {
            throw std::invalid_argument("whiten3: ragged channels");
        }
        centered[static_cast<size_t>(c)] = channels[static_cast<size_t>(c)];
        const double m = window_mean(centered[static_cast<size_t>(c)], 0,
                                     static_cast<int64_t>(n));
        for (double& v : centered[static_cast<size_t>(c)]) v -= m;
    }

    double cov[9];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double acc = 0.0;
            for (size_t k = 0; k < n; ++k) {
                acc += centered[static_cast<size_t>(i)][k] * centered[static_cast<size_t>(j)][k];
            }
            cov[i * 3 + j] = acc / static_cast<double>(n);
        }

    double wmat[9];
    inv_sqrt3(cov, wmat);

    std::array<std::vector<double>, 3> out;
    for (int i = 0; i < 3; ++i) out[static_cast<size_t>(i)].resize(n);
    for (size_t k = 0; k < n; ++k) {
        for (int i = 0; i < 3; ++i) {
            double acc = 0.0;
            for (int j = 0; j < 3; ++j) acc += wmat[i * 3 + j] * centered[static_cast<size_t>(j)][k];
            out[static_cast<size_t>(i)][k] = acc;
        }
    }
    return out;
}

IcaResult fastica3(const std::array<std::vector<double>, 3>& channels, uint64_t seed, double tol,
                   int max_iter) {
    const auto z = whiten3(channels);
    const size_t n = z[0].size();
    if (n < 9) throw std::invalid_argument("fastica3: need at least 3x the mixing dimension");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    double w[9];
    for (int i = 0; i < 9; ++i) w[i] = gauss(rng);

    auto decorrelate = [&](double* m) {
        double mmt[9];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double acc = 0.0;
                for (int k = 0; k < 3; ++k) acc += m[i * 3 + k] * m[j * 3 + k];
                mmt[i * 3 + j] = acc;
            }
        double isq[9];
        inv_sqrt3(mmt, isq);
        double out[9];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double acc = 0.0;
                for (int k = 0; k < 3; ++k) acc += isq[i * 3 + k] * m[k * 3 + j];
                out[i * 3 + j] = acc;
            }
        std::copy(out, out + 9, m);
    };
    decorrelate(w);

    IcaResult result;
    bool converged = false;
    for (int iter = 0; iter < max_iter; ++iter) {
        double w_new[9];
        for (int i = 0; i < 3; ++i) {
            double e_zg[3] = {0.0, 0.0, 0.0};
            double e_gprime = 0.0;
            for (size_t k = 0; k < n; ++k) {
                const double y = w[i * 3 + 0] * z[0][k] + w[i * 3 + 1] * z[1][k] +
                                 w[i * 3 + 2] * z[2][k];
                const double g = std::tanh(y);
                e_zg[0] += z[0][k] * g;
                e_zg[1] += z[1][k] * g;
                e_zg[2] += z[2][k] * g;
                e_gprime += 1.0 - g * g;
            }
            for (int j = 0; j < 3; ++j) {
                w_new[i * 3 + j] = e_zg[j] / static_cast<double>(n) -
                                   e_gprime / static_cast<double>(n) * w[i * 3 + j];
            }
        }
        decorrelate(w_new);

        double delta = 0.0;
        for (int i = 0; i < 3; ++i) {
            double dot = 0.0;
            for (int j = 0; j < 3; ++j) dot += w_new[i * 3 + j] * w[i * 3 + j];
            delta = std::max(delta, 1.0 - std::abs(dot));
        }
        std::copy(w_new, w_new + 9, w);
        result.iterations = iter + 1;
        if (delta < tol) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        throw ConvergenceError("fastica3: no convergence after " + std::to_string(max_iter) +
                               " iterations");
    }

    for (int i = 0; i < 3; ++i) {
        result.components[static_cast<size_t>(i)].resize(n);
        for (size_t k = 0; k < n; ++k) {
            result.components[static_cast<size_t>(i)][k] =
                w[i * 3 + 0] * z[0][k] + w[i * 3 + 1] * z[1][k] + w[i * 3 + 2] * z[2][k];
        }
    }
    return result;
}

BaselineResult ica_method(const RgbTrace& trace, uint64_t seed) {
    const int64_t n = trace.length();
    if (n < 9) throw std::invalid_argument("ica_method: trace too short");
    const int64_t detrend_win = std::max<int64_t>(3, static_cast<int64_t>(std::lround(trace.fs)));

    std::array<std::vector<double>, 3> prepared;
    for (int c = 0; c < 3; ++c) {
        std::vector<double> d = detrend_moving_average(trace.channel(c), detrend_win);
        const double sd = stddev(d);
        if (sd < 1e-14) {
            throw std::invalid_argument("ica_method: constant channel " + std::to_string(c));
        }
        for (double& v : d) v /= sd;
        prepared[static_cast<size_t>(c)] = std::move(d);
    }

    const IcaResult ica = fastica3(prepared, seed);

    // pick the component with the strongest in-band spectral line
    int best = 0;
    double best_power = -1.0;
    for (int c = 0; c < 3; ++c) {
        const Spectrum s = psd(ica.components[static_cast<size_t>(c)], trace.fs);
        double peak = 0.0;
        for (int64_t k : band_bins(s)) {
            peak = std::max(peak, s.power[static_cast<size_t>(k)]);
        }
        if (peak > best_power) {
            best_power = peak;
            best = c;
        }
    }

    BaselineResult out;
    out.signal.fs = trace.fs;
    out.signal.samples = bandpass(ica.components[static_cast<size_t>(best)], trace.fs);
    out.hr_bpm = estimate_hr(out.signal);
    return out;
}

}  // namespace rppg
