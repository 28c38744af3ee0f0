#pragma once

#include <array>
#include <cstdint>

#include "rppg/tensor.hpp"

namespace rppg {

using Dims3 = std::array<int64_t, 3>;  // (t, h, w) order

struct ConvSpec {
    Dims3 kernel{1, 1, 1};
    Dims3 stride{1, 1, 1};
    Dims3 pad{0, 0, 0};
    int64_t in_channels = 1;
    int64_t out_channels = 1;
};

// "same" padding for odd kernels: p = k / 2 per axis
inline Dims3 same_pad(const Dims3& kernel) {
    return {kernel[0] / 2, kernel[1] / 2, kernel[2] / 2};
}

// floor((in + 2p - k) / s) + 1 per axis; throws if any output dim < 1
Shape conv3d_output_shape(const Shape& x_shape, const ConvSpec& spec);

// x: (C_in, T, H, W); w: (C_out, C_in, kt, kh, kw); b: (C_out)
Tensor conv3d(const Tensor& x, const Tensor& w, const Tensor& b, const ConvSpec& spec);

struct Conv3dGrads {
    Tensor x, w, b;
};
Conv3dGrads conv3d_backward(const Tensor& grad_out, const Tensor& x, const Tensor& w,
                            const ConvSpec& spec);

// Transposed convolution, no bias. w: (C_out, C_in, kt, kh, kw).
// out = (in - 1) * stride - 2 * pad + kernel per axis.
Shape transposed_conv3d_output_shape(const Shape& x_shape, const ConvSpec& spec);
Tensor transposed_conv3d(const Tensor& x, const Tensor& w, const ConvSpec& spec);

struct TransposedConv3dGrads {
    Tensor x, w;
};
TransposedConv3dGrads transposed_conv3d_backward(const Tensor& grad_out, const Tensor& x,
                                                 const Tensor& w, const ConvSpec& spec);

enum class PoolKind { Max, Avg };

// Full windows only: out = floor((in - k) / s) + 1 per axis.
Tensor pool3d(const Tensor& x, PoolKind kind, const Dims3& kernel, const Dims3& stride);
// Max routes gradient to the first maximal element in (t,h,w) scan order.
Tensor pool3d_backward(const Tensor& grad_out, const Tensor& x, PoolKind kind,
                       const Dims3& kernel, const Dims3& stride);

enum class BnMode { Train, Eval };

struct BatchNormOut {
    Tensor y;
    Tensor mean;  // per-channel statistics actually used for normalization
    Tensor var;
};

// Channel axis 0, statistics over all remaining axes. Eval mode requires
// running_mean / running_var.
BatchNormOut batchnorm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps,
                       BnMode mode, const Tensor* running_mean = nullptr,
                       const Tensor* running_var = nullptr);

struct BatchNormGrads {
    Tensor x, gamma, beta;
};
// Train-mode backward; mean/var are the batch statistics from the forward pass.
BatchNormGrads batchnorm_backward(const Tensor& grad_y, const Tensor& x, const Tensor& gamma,
                                  const Tensor& mean, const Tensor& var, double eps);

// running <- (1 - momentum) * running + momentum * batch_stat
void batchnorm_update_running(Tensor& running_mean, Tensor& running_var, const Tensor& mean,
                              const Tensor& var, double momentum);

Tensor relu(const Tensor& x);
Tensor relu_backward(const Tensor& grad_y, const Tensor& x);

Tensor sigmoid(const Tensor& x);
// Backward from the forward *output* y (sigmoid'(x) = y (1 - y)).
Tensor sigmoid_backward(const Tensor& grad_y, const Tensor& y);

// x: (T, H, W); exp-normalizes each temporal slice over all H*W positions,
// stabilized by max-subtraction. Each output slice sums to 1.
Tensor softmax_spatial(const Tensor& x);
Tensor softmax_spatial_backward(const Tensor& grad_y, const Tensor& y);

struct AdamState {
    Tensor m, v;
    int64_t step = 0;
};

// Standard Adam update with bias correction; state buffers are allocated on
// first use. lr <= 0 is rejected.
void adam_step(Tensor& param, const Tensor& grad, AdamState& state, double lr,
               double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

}  // namespace rppg
