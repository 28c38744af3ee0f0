#pragma once

// Test-only oracles and generators. These stay independent of the library's
// computation paths: the convolution/pool oracles are direct definitional
// sums, and gradients are checked against central finite differences.

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "rppg/ops.hpp"
#include "rppg/tensor.hpp"

namespace testutil {

using rppg::ConvSpec;
using rppg::Dims3;
using rppg::Shape;
using rppg::Tensor;

inline void fill_uniform(Tensor& t, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    for (int64_t i = 0; i < t.numel(); ++i) t[i] = dist(rng);
}

inline std::vector<double> random_vector(size_t n, std::mt19937_64& rng, double lo = -1.0,
                                         double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> out(n);
    for (auto& v : out) v = dist(rng);
    return out;
}

// Direct definitional 3-D convolution: one big nested loop over output
// positions and the full receptive field.
inline Tensor naive_conv3d(const Tensor& x, const Tensor& w, const Tensor& b,
                           const ConvSpec& spec) {
    const int64_t Ci = x.dim(0), T = x.dim(1), H = x.dim(2), W = x.dim(3);
    const int64_t Co = spec.out_channels;
    const int64_t To = (T + 2 * spec.pad[0] - spec.kernel[0]) / spec.stride[0] + 1;
    const int64_t Ho = (H + 2 * spec.pad[1] - spec.kernel[1]) / spec.stride[1] + 1;
    const int64_t Wo = (W + 2 * spec.pad[2] - spec.kernel[2]) / spec.stride[2] + 1;
    Tensor y(Shape{Co, To, Ho, Wo});
    for (int64_t co = 0; co < Co; ++co)
        for (int64_t to = 0; to < To; ++to)
            for (int64_t ho = 0; ho < Ho; ++ho)
                for (int64_t wo = 0; wo < Wo; ++wo) {
                    double acc = b[co];
                    for (int64_t ci = 0; ci < Ci; ++ci)
                        for (int64_t a = 0; a < spec.kernel[0]; ++a)
                            for (int64_t bb = 0; bb < spec.kernel[1]; ++bb)
                                for (int64_t c = 0; c < spec.kernel[2]; ++c) {
                                    const int64_t it = to * spec.stride[0] - spec.pad[0] + a;
                                    const int64_t ih = ho * spec.stride[1] - spec.pad[1] + bb;
                                    const int64_t iw = wo * spec.stride[2] - spec.pad[2] + c;
                                    if (it < 0 || it >= T || ih < 0 || ih >= H || iw < 0 ||
                                        iw >= W)
                                        continue;
                                    acc += w(co, ci, a, bb, c) * x(ci, it, ih, iw);
                                }
                    y(co, to, ho, wo) = acc;
                }
    return y;
}

inline Tensor naive_pool3d(const Tensor& x, rppg::PoolKind kind, const Dims3& kernel,
                           const Dims3& stride) {
    const int64_t C = x.dim(0), T = x.dim(1), H = x.dim(2), W = x.dim(3);
    const int64_t To = (T - kernel[0]) / stride[0] + 1;
    const int64_t Ho = (H - kernel[1]) / stride[1] + 1;
    const int64_t Wo = (W - kernel[2]) / stride[2] + 1;
    Tensor y(Shape{C, To, Ho, Wo});
    for (int64_t ch = 0; ch < C; ++ch)
        for (int64_t to = 0; to < To; ++to)
            for (int64_t ho = 0; ho < Ho; ++ho)
                for (int64_t wo = 0; wo < Wo; ++wo) {
                    double best = -1e300;
                    double acc = 0.0;
                    for (int64_t a = 0; a < kernel[0]; ++a)
                        for (int64_t bb = 0; bb < kernel[1]; ++bb)
                            for (int64_t c = 0; c < kernel[2]; ++c) {
                                const double v = x(ch, to * stride[0] + a, ho * stride[1] + bb,
                                                   wo * stride[2] + c);
                                best = std::max(best, v);
                                acc += v;
                            }
                    y(ch, to, ho, wo) =
                        kind == rppg::PoolKind::Max
                            ? best
                            : acc / static_cast<double>(kernel[0] * kernel[1] * kernel[2]);
                }
    return y;
}

struct GradCheck {
    double max_rel_err = 0.0;
    double max_abs_err = 0.0;
    int64_t worst_index = -1;
};

// Central finite differences of a scalar function against an analytic
// gradient, element by element.
inline GradCheck check_gradient(const std::function<double()>& loss, double* values,
                                const double* analytic, int64_t n, double h = 1e-5) {
    GradCheck out;
    for (int64_t i = 0; i < n; ++i) {
        const double keep = values[i];
        values[i] = keep + h;
        const double hi = loss();
        values[i] = keep - h;
        const double lo = loss();
        values[i] = keep;
        const double numeric = (hi - lo) / (2.0 * h);
        const double abs_err = std::abs(numeric - analytic[i]);
        const double rel =
            abs_err / std::max({std::abs(numeric), std::abs(analytic[i]), 1e-3});
        if (rel > out.max_rel_err) {
            out.max_rel_err = rel;
            out.worst_index = i;
        }
        out.max_abs_err = std::max(out.max_abs_err, abs_err);
    }
    return out;
}

// Same check restricted to a subset of coordinates (for large parameter sets).
inline GradCheck check_gradient_sampled(const std::function<double()>& loss, double* values,
                                        const double* analytic, int64_t n, int64_t samples,
                                        std::mt19937_64& rng, double h = 1e-5) {
    GradCheck out;
    std::uniform_int_distribution<int64_t> pick(0, n - 1);
    for (int64_t s = 0; s < samples; ++s) {
        const int64_t i = pick(rng);
        const double keep = values[i];
        values[i] = keep + h;
        const double hi = loss();
        values[i] = keep - h;
        const double lo = loss();
        values[i] = keep;
        const double numeric = (hi - lo) / (2.0 * h);
        const double abs_err = std::abs(numeric - analytic[i]);
        const double rel =
            abs_err / std::max({std::abs(numeric), std::abs(analytic[i]), 1e-3});
        if (rel > out.max_rel_err) {
            out.max_rel_err = rel;
            out.worst_index = i;
        }
        out.max_abs_err = std::max(out.max_abs_err, abs_err);
    }
    return out;
}

}  // namespace testutil
