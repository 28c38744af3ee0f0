#include "rppg/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "rppg/parallel.hpp"

namespace rppg {

namespace {

const char* kAxisName[3] = {"t", "h", "w"};

int64_t ceil_div(int64_t a, int64_t b) {
    // b > 0
    return a >= 0 ? (a + b - 1) / b : -((-a) / b);
}

void check_rank(const Tensor& t, size_t rank, const char* op, const char* name) {
    if (t.rank() != rank) {
        throw std::invalid_argument(std::string(op) + ": " + name + " must have rank " +
                                    std::to_string(rank) + ", got " +
                                    shape_to_string(t.shape()));
    }
}

void check_conv_args(const Tensor& x, const Tensor& w, const Tensor* b, const ConvSpec& spec,
                     const char* op) {
    check_rank(x, 4, op, "x");
    check_rank(w, 5, op, "w");
    if (x.dim(0) != spec.in_channels) {
        throw std::invalid_argument(std::string(op) + ": x channel axis is " +
                                    std::to_string(x.dim(0)) + ", spec.in_channels is " +
                                    std::to_string(spec.in_channels));
    }
    if (w.dim(0) != spec.out_channels || w.dim(1) != spec.in_channels) {
        throw std::invalid_argument(std::string(op) + ": w leading dims " +
                                    shape_to_string({w.dim(0), w.dim(1)}) +
                                    " do not match (out_channels,in_channels)=(" +
                                    std::to_string(spec.out_channels) + "," +
                                    std::to_string(spec.in_channels) + ")");
    }
    for (int a = 0; a < 3; ++a) {
        if (w.dim(static_cast<size_t>(2 + a)) != spec.kernel[a]) {
            throw std::invalid_argument(std::string(op) + ": w kernel axis " + kAxisName[a] +
                                        " is " + std::to_string(w.dim(static_cast<size_t>(2 + a))) +
                                        ", spec says " + std::to_string(spec.kernel[a]));
        }
        if (spec.kernel[a] < 1 || spec.stride[a] < 1 || spec.pad[a] < 0) {
            throw std::invalid_argument(std::string(op) + ": bad kernel/stride/pad on axis " +
                                        kAxisName[a]);
        }
    }
    if (b != nullptr) {
        check_rank(*b, 1, op, "b");
        if (b->dim(0) != spec.out_channels) {
            throw std::invalid_argument(std::string(op) + ": bias length " +
                                        std::to_string(b->dim(0)) + " != out_channels " +
                                        std::to_string(spec.out_channels));
        }
    }
}

}  // namespace

Shape conv3d_output_shape(const Shape& x_shape, const ConvSpec& spec) {
    Shape out{spec.out_channels, 0, 0, 0};
    for (int a = 0; a < 3; ++a) {
        const int64_t in = x_shape[static_cast<size_t>(1 + a)];
        const int64_t o = (in + 2 * spec.pad[a] - spec.kernel[a]) / spec.stride[a] + 1;
        if (in + 2 * spec.pad[a] < spec.kernel[a] || o < 1) {
            throw std::invalid_argument(std::string("conv3d: output axis ") + kAxisName[a] +
                                        " would be empty (in=" + std::to_string(in) +
                                        ", k=" + std::to_string(spec.kernel[a]) + ")");
        }
        out[static_cast<size_t>(1 + a)] = o;
    }
    return out;
}

Tensor conv3d(const Tensor& x, const Tensor& w, const Tensor& b, const ConvSpec& spec) {
    check_conv_args(x, w, &b, spec, "conv3d");
    const Shape out_shape = conv3d_output_shape(x.shape(), spec);

    const int64_t Ci = spec.in_channels, Co = spec.out_channels;
    const int64_t T = x.dim(1), H = x.dim(2), W = x.dim(3);
    const int64_t To = out_shape[1], Ho = out_shape[2], Wo = out_shape[3];
    const int64_t kt = spec.kernel[0], kh = spec.kernel[1], kw = spec.kernel[2];
    const int64_t st = spec.stride[0], sh = spec.stride[1], sw = spec.stride[2];
    const int64_t pt = spec.pad[0], ph = spec.pad[1], pw = spec.pad[2];

    Tensor y(out_shape);
    const double* xd = x.data();
    const double* wd = w.data();
    const double* bd = b.data();
    double* yd = y.data();

    parallel_for(Co, [&](int64_t co) {
        double* yc = yd + co * To * Ho * Wo;
        std::fill(yc, yc + To * Ho * Wo, bd[co]);
        for (int64_t ci = 0; ci < Ci; ++ci) {
            const double* xc = xd + ci * T * H * W;
            const double* wc = wd + (co * Ci + ci) * kt * kh * kw;
            for (int64_t a = 0; a < kt; ++a) {
                for (int64_t bk = 0; bk < kh; ++bk) {
                    for (int64_t c = 0; c < kw; ++c) {
                        const double wv = wc[(a * kh + bk) * kw + c];
                        // valid wo range so that iw = wo*sw - pw + c stays inside
                        const int64_t wo_lo = std::max<int64_t>(0, ceil_div(pw - c, sw));
                        const int64_t wo_hi =
                            std::min<int64_t>(Wo, (W - 1 - c + pw) / sw + 1);
                        if (wo_lo >= wo_hi) continue;
                        for (int64_t to = 0; to < To; ++to) {
                            const int64_t it = to * st - pt + a;
                            if (it < 0 || it >= T) continue;
                            for (int64_t ho = 0; ho < Ho; ++ho) {
                                const int64_t ih = ho * sh - ph + bk;
                                if (ih < 0 || ih >= H) continue;
                                const double* xrow = xc + (it * H + ih) * W - pw + c;
                                double* yrow = yc + (to * Ho + ho) * Wo;
                                if (sw == 1) {
                                    for (int64_t wo = wo_lo; wo < wo_hi; ++wo)
                                        yrow[wo] += wv * xrow[wo];
                                } else {
                                    for (int64_t wo = wo_lo; wo < wo_hi; ++wo)
                                        yrow[wo] += wv * xrow[wo * sw];
                                }
                            }
                        }
                    }
                }
            }
        }
    });
    return y;
}

Conv3dGrads conv3d_backward(const Tensor& grad_out, const Tensor& x, const Tensor& w,
                            const ConvSpec& spec) {
    check_conv_args(x, w, nullptr, spec, "conv3d_backward");
    const Shape out_shape = conv3d_output_shape(x.shape(), spec);
    if (grad_out.shape() != out_shape) {
        throw std::invalid_argument("conv3d_backward: grad_out shape " +
                                    shape_to_string(grad_out.shape()) +
                                    " != forward output shape " + shape_to_string(out_shape));
    }

    const int64_t Ci = spec.in_channels, Co = spec.out_channels;
    const int64_t T = x.dim(1), H = x.dim(2), W = x.dim(3);
    const int64_t To = out_shape[1], Ho = out_shape[2], Wo = out_shape[3];
    const int64_t kt = spec.kernel[0], kh = spec.kernel[1], kw = spec.kernel[2];
    const int64_t st = spec.stride[0], sh = spec.stride[1], sw = spec.stride[2];
    const int64_t pt = spec.pad[0], ph = spec.pad[1], pw = spec.pad[2];

    Conv3dGrads g{Tensor(x.shape()), Tensor(w.shape()), Tensor(Shape{Co})};
    const double* xd = x.data();
    const double* wd = w.data();
    const double* gyd = grad_out.data();

    // bias and weight gradients, one output channel per task
    parallel_for(Co, [&](int64_t co) {
        const double* gyc = gyd + co * To * Ho * Wo;
        double acc_b = 0.0;
        for (int64_t i = 0; i < To * Ho * Wo; ++i) acc_b += gyc[i];
        g.b[co] = acc_b;

        for (int64_t ci = 0; ci < Ci; ++ci) {
            const double* xc = xd + ci * T * H * W;
            double* gwc = g.w.data() + (co * Ci + ci) * kt * kh * kw;
            for (int64_t a = 0; a < kt; ++a) {
                for (int64_t bk = 0; bk < kh; ++bk) {
                    for (int64_t c = 0; c < kw; ++c) {
                        const int64_t wo_lo = std::max<int64_t>(0, ceil_div(pw - c, sw));
                        const int64_t wo_hi =
                            std::min<int64_t>(Wo, (W - 1 - c + pw) / sw + 1);
                        double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
                        for (int64_t to = 0; to < To; ++to) {
                            const int64_t it = to * st - pt + a;
                            if (it < 0 || it >= T) continue;
                            for (int64_t ho = 0; ho < Ho; ++ho) {
                                const int64_t ih = ho * sh - ph + bk;
                                if (ih < 0 || ih >= H) continue;
                                const double* xrow = xc + (it * H + ih) * W - pw + c;
                                const double* gyrow = gyc + (to * Ho + ho) * Wo;
                                int64_t wo = wo_lo;
                                for (; wo + 3 < wo_hi; wo += 4) {
                                    acc0 += gyrow[wo] * xrow[wo * sw];
                                    acc1 += gyrow[wo + 1] * xrow[(wo + 1) * sw];
                                    acc2 += gyrow[wo + 2] * xrow[(wo + 2) * sw];
                                    acc3 += gyrow[wo + 3] * xrow[(wo + 3) * sw];
                                }
                                for (; wo < wo_hi; ++wo) acc0 += gyrow[wo] * xrow[wo * sw];
                            }
                        }
                        gwc[(a * kh + bk) * kw + c] = ((acc0 + acc1) + (acc2 + acc3));
                    }
                }
            }
        }
    });

    // input gradient, gather form, one input channel per task
    parallel_for(Ci, [&](int64_t ci) {
        double* gxc = g.x.data() + ci * T * H * W;
        for (int64_t co = 0; co < Co; ++co) {
            const double* gyc = gyd + co * To * Ho * Wo;
            const double* wc = wd + (co * Ci + ci) * kt * kh * kw;
            for (int64_t a = 0; a < kt; ++a) {
                for (int64_t bk = 0; bk < kh; ++bk) {
                    for (int64_t c = 0; c < kw; ++c) {
                        const double wv = wc[(a * kh + bk) * kw + c];
                        const int64_t wo_lo = std::max<int64_t>(0, ceil_div(pw - c, sw));
                        const int64_t wo_hi =
                            std::min<int64_t>(Wo, (W - 1 - c + pw) / sw + 1);
                        if (wo_lo >= wo_hi) continue;
                        for (int64_t to = 0; to < To; ++to) {
                            const int64_t it = to * st - pt + a;
                            if (it < 0 || it >= T) continue;
                            for (int64_t ho = 0; ho < Ho; ++ho) {
                                const int64_t ih = ho * sh - ph + bk;
                                if (ih < 0 || ih >= H) continue;
                                double* gxrow = gxc + (it * H + ih) * W - pw + c;
                                const double* gyrow = gyc + (to * Ho + ho) * Wo;
                                if (sw == 1) {
                                    for (int64_t wo = wo_lo; wo < wo_hi; ++wo)
                                        gxrow[wo] += wv * gyrow[wo];
                                } else {
                                    for (int64_t wo = wo_lo; wo < wo_hi; ++wo)
                                        gxrow[wo * sw] += wv * gyrow[wo];
                                }
                            }
                        }
                    }
                }
            }
        }
    });

    return g;
}

Shape transposed_conv3d_output_shape(const Shape& x_shape, const ConvSpec& spec) {
    Shape out{spec.out_channels, 0, 0, 0};
    for (int a = 0; a < 3; ++a) {
        const int64_t in = x_shape[static_cast<size_t>(1 + a)];
        const int64_t o = (in - 1) * spec.stride[a] - 2 * spec.pad[a] + spec.kernel[a];
        if (o < 1) {
            throw std::invalid_argument(std::string("transposed_conv3d: output axis ") +
                                        kAxisName[a] + " would be empty");
        }
        out[static_cast<size_t>(1 + a)] = o;
    }
    return out;
}

Tensor transposed_conv3d(const Tensor& x, const Tensor& w, const ConvSpec& spec) {
    check_conv_args(x, w, nullptr, spec, "transposed_conv3d");
    const Shape out_shape = transposed_conv3d_output_shape(x.shape(), spec);

    const int64_t Ci = spec.in_channels, Co = spec.out_channels;
    const int64_t T = x.dim(1), H = x.dim(2), W = x.dim(3);
    const int64_t To = out_shape[1], Ho = out_shape[2], Wo = out_shape[3];
    const int64_t kt = spec.kernel[0], kh = spec.kernel[1], kw = spec.kernel[2];
    const int64_t st = spec.stride[0], sh = spec.stride[1], sw = spec.stride[2];
    const int64_t pt = spec.pad[0], ph = spec.pad[1], pw = spec.pad[2];

    Tensor y(out_shape);
    const double* xd = x.data();
    const double* wd = w.data();

    // gather form: each output element sums the inputs that scatter onto it
    parallel_for(Co, [&](int64_t co) {
        double* yc = y.data() + co * To * Ho * Wo;
        for (int64_t ci = 0; ci < Ci; ++ci) {
            const double* xc = xd + ci * T * H * W;
            const double* wc = wd + (co * Ci + ci) * kt * kh * kw;
            for (int64_t a = 0; a < kt; ++a) {
                for (int64_t bk = 0; bk < kh; ++bk) {
                    for (int64_t c = 0; c < kw; ++c) {
                        const double wv = wc[(a * kh + bk) * kw + c];
                        for (int64_t it = 0; it < T; ++it) {
                            const int64_t ot = it * st - pt + a;
                            if (ot < 0 || ot >= To) continue;
                            for (int64_t ih = 0; ih < H; ++ih) {
                                const int64_t oh = ih * sh - ph + bk;
                                if (oh < 0 || oh >= Ho) continue;
                                const double* xrow = xc + (it * H + ih) * W;
                                double* yrow = yc + (ot * Ho + oh) * Wo - pw + c;
                                for (int64_t iw = 0; iw < W; ++iw) {
                                    const int64_t ow = iw * sw - pw + c;
                                    if (ow < 0 || ow >= Wo) continue;
                                    yrow[iw * sw] += wv * xrow[iw];
                                }
                            }
                        }
                    }
                }
            }
        }
    });
    return y;
}

TransposedConv3dGrads transposed_conv3d_backward(const Tensor& grad_out, const Tensor& x,
                                                 const Tensor& w, const ConvSpec& spec) {
    check_conv_args(x, w, nullptr, spec, "transposed_conv3d_backward");
    const Shape out_shape = transposed_conv3d_output_shape(x.shape(), spec);
    if (grad_out.shape() != out_shape) {
        throw std::invalid_argument("transposed_conv3d_backward: grad_out shape " +
                                    shape_to_string(grad_out.shape()) +
                                    " != forward output shape " + shape_to_string(out_shape));
    }

    const int64_t Ci = spec.in_channels, Co = spec.out_channels;
    const int64_t T = x.dim(1), H = x.dim(2), W = x.dim(3);
    const int64_t To = out_shape[1], Ho = out_shape[2], Wo = out_shape[3];
    const int64_t kt = spec.kernel[0], kh = spec.kernel[1], kw = spec.kernel[2];
    const int64_t st = spec.stride[0], sh = spec.stride[1], sw = spec.stride[2];
    const int64_t pt = spec.pad[0], ph = spec.pad[1], pw = spec.pad[2];

    TransposedConv3dGrads g{Tensor(x.shape()), Tensor(w.shape())};
    const double* xd = x.data();
    const double* wd = w.data();
    const double* gyd = grad_out.data();

    parallel_for(Ci, [&](int64_t ci) {
        double* gxc = g.x.data() + ci * T * H * W;
        for (int64_t co = 0; co < Co; ++co) {
            const double* gyc = gyd + co * To * Ho * Wo;
            const double* wc = wd + (co * Ci + ci) * kt * kh * kw;
            for (int64_t a = 0; a < kt; ++a) {
                for (int64_t bk = 0; bk < kh; ++bk) {
                    for (int64_t c = 0; c < kw; ++c) {
                        const double wv = wc[(a * kh + bk) * kw + c];
                        for (int64_t it = 0; it < T; ++it) {
                            const int64_t ot = it * st - pt + a;
                            if (ot < 0 || ot >= To) continue;
                            for (int64_t ih = 0; ih < H; ++ih) {
                                const int64_t oh = ih * sh - ph + bk;
                                if (oh < 0 || oh >= Ho) continue;
                                double* gxrow = gxc + (it * H + ih) * W;
                                const double* gyrow = gyc + (ot * Ho + oh) * Wo - pw + c;
                                for (int64_t iw = 0; iw < W; ++iw) {
                                    const int64_t ow = iw * sw - pw + c;
                                    if (ow < 0 || ow >= Wo) continue;
                                    gxrow[iw] += wv * gyrow[iw * sw];
                                }
                            }
                        }
                    }
                }
            }
        }
    });

    parallel_for(Co, [&](int64_t co) {
        const double* gyc = gyd + co * To * Ho * Wo;
        for (int64_t ci = 0; ci < Ci; ++ci) {
            const double* xc = xd + ci * T * H * W;
            double* gwc = g.w.data() + (co * Ci + ci) * kt * kh * kw;
            for (int64_t a = 0; a < kt; ++a) {
                for (int64_t bk = 0; bk < kh; ++bk) {
                    for (int64_t c = 0; c < kw; ++c) {
                        double acc = 0.0;
                        for (int64_t it = 0; it < T; ++it) {
                            const int64_t ot = it * st - pt + a;
                            if (ot < 0 || ot >= To) continue;
                            for (int64_t ih = 0; ih < H; ++ih) {
                                const int64_t oh = ih * sh - ph + bk;
                                if (oh < 0 || oh >= Ho) continue;
                                const double* xrow = xc + (it * H + ih) * W;
                                const double* gyrow = gyc + (ot * Ho + oh) * Wo - pw + c;
                                for (int64_t iw = 0; iw < W; ++iw) {
                                    const int64_t ow = iw * sw - pw + c;
                                    if (ow < 0 || ow >= Wo) continue;
                                    acc += xrow[iw] * gyrow[iw * sw];
                                }
                            }
                        }
                        gwc[(a * kh + bk) * kw + c] = acc;
                    }
                }
            }
        }
    });

    return g;
}

namespace {

Shape pool_output_shape(const Shape& x_shape, const Dims3& kernel, const Dims3& stride) {
    Shape out{x_shape[0], 0, 0, 0};
    for (int a = 0; a < 3; ++a) {
        const int64_t in = x_shape[static_cast<size_t>(1 + a)];
        if (kernel[a] > in) {
            throw std::invalid_argument(std::string("pool3d: kernel exceeds input on axis ") +
                                        kAxisName[a] + " (" + std::to_string(kernel[a]) + " > " +
                                        std::to_string(in) + ")");
        }
        if (kernel[a] < 1 || stride[a] < 1) {
            throw std::invalid_argument("pool3d: kernel and stride must be positive");
        }
        out[static_cast<size_t>(1 + a)] = (in - kernel[a]) / stride[a] + 1;
    }
    return out;
}

}  // namespace

Tensor pool3d(const Tensor& x, PoolKind kind, const Dims3& kernel, const Dims3& stride) {
    check_rank(x, 4, "pool3d", "x");
    const Shape out_shape = pool_output_shape(x.shape(), kernel, stride);
    const int64_t C = x.dim(0), T = x.dim(1), H = x.dim(2), W = x.dim(3);
    const int64_t To = out_shape[1], Ho = out_shape[2], Wo = out_shape[3];
    const double inv_count = 1.0 / static_cast<double>(kernel[0] * kernel[1] * kernel[2]);

    Tensor y(out_shape);
    parallel_for(C, [&](int64_t ch) {
        const double* xc = x.data() + ch * T * H * W;
        double* yc = y.data() + ch * To * Ho * Wo;
        for (int64_t to = 0; to < To; ++to) {
            for (int64_t ho = 0; ho < Ho; ++ho) {
                for (int64_t wo = 0; wo < Wo; ++wo) {
                    const int64_t t0 = to * stride[0], h0 = ho * stride[1], w0 = wo * stride[2];
                    if (kind == PoolKind::Max) {
                        double best = -std::numeric_limits<double>::infinity();
                        for (int64_t a = 0; a < kernel[0]; ++a)
                            for (int64_t bk = 0; bk < kernel[1]; ++bk)
                                for (int64_t c = 0; c < kernel[2]; ++c) {
                                    const double v = xc[((t0 + a) * H + h0 + bk) * W + w0 + c];
                                    if (v > best) best = v;
                                }
                        yc[(to * Ho + ho) * Wo + wo] = best;
                    } else {
                        double acc = 0.0;
                        for (int64_t a = 0; a < kernel[0]; ++a)
                            for (int64_t bk = 0; bk < kernel[1]; ++bk)
                                for (int64_t c = 0; c < kernel[2]; ++c)
                                    acc += xc[((t0 + a) * H + h0 + bk) * W + w0 + c];
                        yc[(to * Ho + ho) * Wo + wo] = acc * inv_count;
                    }
                }
            }
        }
    });
    return y;
}

Tensor pool3d_backward(const Tensor& grad_out, const Tensor& x, PoolKind kind,
                       const Dims3& kernel, const Dims3& stride) {
    check_rank(x, 4, "pool3d_backward", "x");
    const Shape out_shape = pool_output_shape(x.shape(), kernel, stride);
    if (grad_out.shape() != out_shape) {
        throw std::invalid_argument("pool3d_backward: grad_out shape " +
                                    shape_to_string(grad_out.shape()) +
                                    " != forward output shape " + shape_to_string(out_shape));
    }
    const int64_t C = x.dim(0), T = x.dim(1), H = x.dim(2), W = x.dim(3);
    const int64_t To = out_shape[1], Ho = out_shape[2], Wo = out_shape[3];
    const double inv_count = 1.0 / static_cast<double>(kernel[0] * kernel[1] * kernel[2]);

    Tensor gx(x.shape());
    parallel_for(C, [&](int64_t ch) {
        const double* xc = x.data() + ch * T * H * W;
        const double* gyc = grad_out.data() + ch * To * Ho * Wo;
        double* gxc = gx.data() + ch * T * H * W;
        for (int64_t to = 0; to < To; ++to) {
            for (int64_t ho = 0; ho < Ho; ++ho) {
                for (int64_t wo = 0; wo < Wo; ++wo) {
                    const int64_t t0 = to * stride[0], h0 = ho * stride[1], w0 = wo * stride[2];
                    const double gy = gyc[(to * Ho + ho) * Wo + wo];
                    if (kind == PoolKind::Max) {
                        // first maximal element in scan order takes the gradient
                        double best = -std::numeric_limits<double>::infinity();
                        int64_t best_idx = -1;
                        for (int64_t a = 0; a < kernel[0]; ++a)
                            for (int64_t bk = 0; bk < kernel[1]; ++bk)
                                for (int64_t c = 0; c < kernel[2]; ++c) {
                                    const int64_t idx = ((t0 + a) * H + h0 + bk) * W + w0 + c;
                                    if (xc[idx] > best) {
                                        best = xc[idx];
                                        best_idx = idx;
                                    }
                                }
                        gxc[best_idx] += gy;
                    } else {
                        const double spread = gy * inv_count;
                        for (int64_t a = 0; a < kernel[0]; ++a)
                            for (int64_t bk = 0; bk < kernel[1]; ++bk)
                                for (int64_t c = 0; c < kernel[2]; ++c)
                                    gxc[((t0 + a) * H + h0 + bk) * W + w0 + c] += spread;
                    }
                }
            }
        }
    });
    return gx;
}

BatchNormOut batchnorm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps,
                       BnMode mode, const Tensor* running_mean, const Tensor* running_var) {
    if (eps <= 0.0) throw std::invalid_argument("batchnorm: eps must be > 0");
    if (x.rank() < 2) throw std::invalid_argument("batchnorm: x must have rank >= 2");
    const int64_t C = x.dim(0);
    const int64_t M = x.numel() / C;
    if (gamma.numel() != C || beta.numel() != C) {
        throw std::invalid_argument("batchnorm: gamma/beta length != channel count " +
                                    std::to_string(C));
    }
    if (mode == BnMode::Eval && (running_mean == nullptr || running_var == nullptr)) {
        throw std::invalid_argument("batchnorm: eval mode requires running statistics");
    }

    BatchNormOut out{Tensor(x.shape()), Tensor(Shape{C}), Tensor(Shape{C})};
    parallel_for(C, [&](int64_t ch) {
        const double* xc = x.data() + ch * M;
        double* yc = out.y.data() + ch * M;
        double mean, var;
        if (mode == BnMode::Train) {
            double s = 0.0;
            for (int64_t i = 0; i < M; ++i) s += xc[i];
            mean = s / static_cast<double>(M);
            double sq = 0.0;
            for (int64_t i = 0; i < M; ++i) {
                const double d = xc[i] - mean;
                sq += d * d;
            }
            var = sq / static_cast<double>(M);
        } else {
            mean = (*running_mean)[ch];
            var = (*running_var)[ch];
        }
        out.mean[ch] = mean;
        out.var[ch] = var;
        const double scale = gamma[ch] / std::sqrt(var + eps);
        const double shift = beta[ch] - mean * scale;
        for (int64_t i = 0; i < M; ++i) yc[i] = xc[i] * scale + shift;
    });
    return out;
}

BatchNormGrads batchnorm_backward(const Tensor& grad_y, const Tensor& x, const Tensor& gamma,
                                  const Tensor& mean, const Tensor& var, double eps) {
    if (!grad_y.same_shape(x)) {
        throw std::invalid_argument("batchnorm_backward: grad_y shape != x shape");
    }
    const int64_t C = x.dim(0);
    const int64_t M = x.numel() / C;

    BatchNormGrads g{Tensor(x.shape()), Tensor(Shape{C}), Tensor(Shape{C})};
    parallel_for(C, [&](int64_t ch) {
        const double* xc = x.data() + ch * M;
        const double* gyc = grad_y.data() + ch * M;
        double* gxc = g.x.data() + ch * M;
        const double inv_std = 1.0 / std::sqrt(var[ch] + eps);
        const double mu = mean[ch];

        double sum_gy = 0.0, sum_gy_xhat = 0.0;
        for (int64_t i = 0; i < M; ++i) {
            const double xhat = (xc[i] - mu) * inv_std;
            sum_gy += gyc[i];
            sum_gy_xhat += gyc[i] * xhat;
        }
        g.beta[ch] = sum_gy;
        g.gamma[ch] = sum_gy_xhat;

        const double inv_m = 1.0 / static_cast<double>(M);
        const double k = gamma[ch] * inv_std;
        for (int64_t i = 0; i < M; ++i) {
            const double xhat = (xc[i] - mu) * inv_std;
            gxc[i] = k * (gyc[i] - inv_m * sum_gy - xhat * inv_m * sum_gy_xhat);
        }
    });
    return g;
}

void batchnorm_update_running(Tensor& running_mean, Tensor& running_var, const Tensor& mean,
                              const Tensor& var, double momentum) {
    for (int64_t i = 0; i < mean.numel(); ++i) {
        running_mean[i] = (1.0 - momentum) * running_mean[i] + momentum * mean[i];
        running_var[i] = (1.0 - momentum) * running_var[i] + momentum * var[i];
    }
}

Tensor relu(const Tensor& x) {
    Tensor y(x.shape());
    const double* xd = x.data();
    double* yd = y.data();
    for (int64_t i = 0; i < x.numel(); ++i) yd[i] = xd[i] > 0.0 ? xd[i] : 0.0;
    return y;
}

Tensor relu_backward(const Tensor& grad_y, const Tensor& x) {
    if (!grad_y.same_shape(x)) throw std::invalid_argument("relu_backward: shape mismatch");
    Tensor gx(x.shape());
    const double* xd = x.data();
    const double* gyd = grad_y.data();
    double* gxd = gx.data();
    for (int64_t i = 0; i < x.numel(); ++i) gxd[i] = xd[i] > 0.0 ? gyd[i] : 0.0;
    return gx;
}

Tensor sigmoid(const Tensor& x) {
    Tensor y(x.shape());
    const double* xd = x.data();
    double* yd = y.data();
    for (int64_t i = 0; i < x.numel(); ++i) yd[i] = 1.0 / (1.0 + std::exp(-xd[i]));
    return y;
}

Tensor sigmoid_backward(const Tensor& grad_y, const Tensor& y) {
    if (!grad_y.same_shape(y)) throw std::invalid_argument("sigmoid_backward: shape mismatch");
    Tensor gx(y.shape());
    const double* yd = y.data();
    const double* gyd = grad_y.data();
    double* gxd = gx.data();
    for (int64_t i = 0; i < y.numel(); ++i) gxd[i] = gyd[i] * yd[i] * (1.0 - yd[i]);
    return gx;
}

Tensor softmax_spatial(const Tensor& x) {
    check_rank(x, 3, "softmax_spatial", "x");
    const int64_t T = x.dim(0), HW = x.dim(1) * x.dim(2);
    Tensor y(x.shape());
    parallel_for(T, [&](int64_t t) {
        const double* xs = x.data() + t * HW;
        double* ys = y.data() + t * HW;
        double hi = xs[0];
        for (int64_t i = 1; i < HW; ++i) hi = std::max(hi, xs[i]);
        double sum = 0.0;
        for (int64_t i = 0; i < HW; ++i) {
            ys[i] = std::exp(xs[i] - hi);
            sum += ys[i];
        }
        const double inv = 1.0 / sum;
        for (int64_t i = 0; i < HW; ++i) ys[i] *= inv;
    });
    return y;
}

Tensor softmax_spatial_backward(const Tensor& grad_y, const Tensor& y) {
    if (!grad_y.same_shape(y)) {
        throw std::invalid_argument("softmax_spatial_backward: shape mismatch");
    }
    const int64_t T = y.dim(0), HW = y.dim(1) * y.dim(2);
    Tensor gx(y.shape());
    parallel_for(T, [&](int64_t t) {
        const double* ys = y.data() + t * HW;
        const double* gys = grad_y.data() + t * HW;
        double* gxs = gx.data() + t * HW;
        double dot = 0.0;
        for (int64_t i = 0; i < HW; ++i) dot += gys[i] * ys[i];
        for (int64_t i = 0; i < HW; ++i) gxs[i] = ys[i] * (gys[i] - dot);
    });
    return gx;
}

void adam_step(Tensor& param, const Tensor& grad, AdamState& state, double lr, double beta1,
               double beta2, double eps) {
    if (lr <= 0.0) throw std::invalid_argument("adam_step: lr must be > 0");
    if (!param.same_shape(grad)) throw std::invalid_argument("adam_step: param/grad shape mismatch");
    if (state.m.numel() != param.numel()) {
        state.m = Tensor(param.shape());
        state.v = Tensor(param.shape());
        state.step = 0;
    }
    state.step += 1;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
    double* p = param.data();
    const double* g = grad.data();
    double* m = state.m.data();
    double* v = state.v.data();
    for (int64_t i = 0; i < param.numel(); ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

}  // namespace rppg
