#include "rppg/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace rppg {

void kaiming_init(Tensor& w, int64_t fan_in, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
    for (int64_t i = 0; i < w.numel(); ++i) w[i] = dist(rng);
}

Conv3dLayer::Conv3dLayer(const std::string& name, int64_t in_ch, int64_t out_ch, Dims3 kernel,
                         Dims3 stride, Dims3 pad) {
    spec_.kernel = kernel;
    spec_.stride = stride;
    spec_.pad = pad;
    spec_.in_channels = in_ch;
    spec_.out_channels = out_ch;
    w = Parameter(name + ".w", Shape{out_ch, in_ch, kernel[0], kernel[1], kernel[2]});
    b = Parameter(name + ".b", Shape{out_ch});
}

Tensor Conv3dLayer::forward(const Tensor& x, bool cache) {
    if (cache) x_cache_ = x;
    return conv3d(x, w.value, b.value, spec_);
}

Tensor Conv3dLayer::backward(const Tensor& grad_y) {
    Conv3dGrads g = conv3d_backward(grad_y, x_cache_, w.value, spec_);
    for (int64_t i = 0; i < w.value.numel(); ++i) w.value.grad()[i] += g.w[i];
    for (int64_t i = 0; i < b.value.numel(); ++i) b.value.grad()[i] += g.b[i];
    return std::move(g.x);
}

void Conv3dLayer::init(std::mt19937_64& rng) {
    const int64_t fan_in =
        spec_.in_channels * spec_.kernel[0] * spec_.kernel[1] * spec_.kernel[2];
    kaiming_init(w.value, fan_in, rng);
    w.value.zero_grad();
    b.value.fill(0.0);
    b.value.zero_grad();
}

void Conv3dLayer::collect(std::vector<Parameter*>& out) {
    out.push_back(&w);
    out.push_back(&b);
}

TransposedConv3dLayer::TransposedConv3dLayer(const std::string& name, int64_t in_ch,
                                             int64_t out_ch, Dims3 kernel, Dims3 stride,
                                             Dims3 pad) {
    spec_.kernel = kernel;
    spec_.stride = stride;
    spec_.pad = pad;
    spec_.in_channels = in_ch;
    spec_.out_channels = out_ch;
    w = Parameter(name + ".w", Shape{out_ch, in_ch, kernel[0], kernel[1], kernel[2]});
}

Tensor TransposedConv3dLayer::forward(const Tensor& x, bool cache) {
    if (cache) x_cache_ = x;
    return transposed_conv3d(x, w.value, spec_);
}

Tensor TransposedConv3dLayer::backward(const Tensor& grad_y) {
    TransposedConv3dGrads g = transposed_conv3d_backward(grad_y, x_cache_, w.value, spec_);
    for (int64_t i = 0; i < w.value.numel(); ++i) w.value.grad()[i] += g.w[i];
    return std::move(g.x);
}

void TransposedConv3dLayer::init(std::mt19937_64& rng) {
    const int64_t fan_in =
        spec_.in_channels * spec_.kernel[0] * spec_.kernel[1] * spec_.kernel[2];
    kaiming_init(w.value, fan_in, rng);
    w.value.zero_grad();
}

void TransposedConv3dLayer::collect(std::vector<Parameter*>& out) { out.push_back(&w); }

BatchNormLayer::BatchNormLayer(const std::string& name, int64_t channels, double eps,
                               double momentum)
    : eps_(eps), momentum_(momentum) {
    gamma = Parameter(name + ".gamma", Shape{channels});
    beta = Parameter(name + ".beta", Shape{channels});
    gamma.value.fill(1.0);
    running_mean = Tensor(Shape{channels});
    running_var = Tensor::full(Shape{channels}, 1.0);
}

Tensor BatchNormLayer::forward(const Tensor& x, BnMode mode, bool cache) {
    BatchNormOut out = batchnorm(x, gamma.value, beta.value, eps_, mode,
                                 mode == BnMode::Eval ? &running_mean : nullptr,
                                 mode == BnMode::Eval ? &running_var : nullptr);
    if (mode == BnMode::Train) {
        batchnorm_update_running(running_mean, running_var, out.mean, out.var, momentum_);
    }
    if (cache) {
        x_cache_ = x;
        mean_cache_ = std::move(out.mean);
        var_cache_ = std::move(out.var);
    }
    return std::move(out.y);
}

Tensor BatchNormLayer::backward(const Tensor& grad_y) {
    BatchNormGrads g =
        batchnorm_backward(grad_y, x_cache_, gamma.value, mean_cache_, var_cache_, eps_);
    for (int64_t i = 0; i < gamma.value.numel(); ++i) {
        gamma.value.grad()[i] += g.gamma[i];
        beta.value.grad()[i] += g.beta[i];
    }
    return std::move(g.x);
}

void BatchNormLayer::collect(std::vector<Parameter*>& out) {
    out.push_back(&gamma);
    out.push_back(&beta);
}

Tensor ReluLayer::forward(const Tensor& x, bool cache) {
    if (cache) x_cache_ = x;
    return relu(x);
}

Tensor ReluLayer::backward(const Tensor& grad_y) { return relu_backward(grad_y, x_cache_); }

Tensor SigmoidLayer::forward(const Tensor& x, bool cache) {
    Tensor y = sigmoid(x);
    if (cache) y_cache_ = y;
    return y;
}

Tensor SigmoidLayer::backward(const Tensor& grad_y) {
    return sigmoid_backward(grad_y, y_cache_);
}

Tensor Pool3dLayer::forward(const Tensor& x, bool cache) {
    if (cache) x_cache_ = x;
    return pool3d(x, kind_, kernel_, stride_);
}

Tensor Pool3dLayer::backward(const Tensor& grad_y) {
    return pool3d_backward(grad_y, x_cache_, kind_, kernel_, stride_);
}

}  // namespace rppg
