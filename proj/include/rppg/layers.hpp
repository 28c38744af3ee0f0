#pragma once

#include <random>
#include <string>
#include <vector>

#include "rppg/ops.hpp"
#include "rppg/tensor.hpp"

namespace rppg {

// Named trainable tensor; gradients accumulate into value's grad buffer.
struct Parameter {
    std::string name;
    Tensor value;

    Parameter() = default;
    Parameter(std::string name, Shape shape) : name(std::move(name)), value(std::move(shape)) {
        value.ensure_grad();
    }
};

void kaiming_init(Tensor& w, int64_t fan_in, std::mt19937_64& rng);

// Stateful layers for the fixed-topology network. Each instance runs at most
// one forward per pass; backward consumes the cached activations.

class Conv3dLayer {
  public:
    Conv3dLayer(const std::string& name, int64_t in_ch, int64_t out_ch, Dims3 kernel, Dims3 stride,
                Dims3 pad);

    Tensor forward(const Tensor& x, bool cache);
    Tensor backward(const Tensor& grad_y);

    void init(std::mt19937_64& rng);
    void collect(std::vector<Parameter*>& out);
    const ConvSpec& spec() const { return spec_; }

    Parameter w, b;

  private:
    ConvSpec spec_;
    Tensor x_cache_;
};

class TransposedConv3dLayer {
  public:
    TransposedConv3dLayer(const std::string& name, int64_t in_ch, int64_t out_ch, Dims3 kernel,
                          Dims3 stride, Dims3 pad);

    Tensor forward(const Tensor& x, bool cache);
    Tensor backward(const Tensor& grad_y);

    void init(std::mt19937_64& rng);
    void collect(std::vector<Parameter*>& out);

    Parameter w;

  private:
    ConvSpec spec_;
    Tensor x_cache_;
};

class BatchNormLayer {
  public:
    BatchNormLayer(const std::string& name, int64_t channels, double eps = 1e-5,
                   double momentum = 0.1);

    Tensor forward(const Tensor& x, BnMode mode, bool cache);
    Tensor backward(const Tensor& grad_y);

    void collect(std::vector<Parameter*>& out);

    Parameter gamma, beta;
    Tensor running_mean, running_var;  // persistent state, not optimized

  private:
    double eps_, momentum_;
    Tensor x_cache_, mean_cache_, var_cache_;
};

class ReluLayer {
  public:
    Tensor forward(const Tensor& x, bool cache);
    Tensor backward(const Tensor& grad_y);

  private:
    Tensor x_cache_;
};

class SigmoidLayer {
  public:
    Tensor forward(const Tensor& x, bool cache);
    Tensor backward(const Tensor& grad_y);

  private:
    Tensor y_cache_;
};

class Pool3dLayer {
  public:
    Pool3dLayer(PoolKind kind, Dims3 kernel, Dims3 stride)
        : kind_(kind), kernel_(kernel), stride_(stride) {}

    Tensor forward(const Tensor& x, bool cache);
    Tensor backward(const Tensor& grad_y);

  private:
    PoolKind kind_;
    Dims3 kernel_, stride_;
    Tensor x_cache_;
};

}  // namespace rppg
