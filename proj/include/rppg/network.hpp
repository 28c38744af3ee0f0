#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rppg/layers.hpp"

namespace rppg {

struct NetworkConfig {
    int64_t T = 150;
    int64_t H = 112;
    int64_t W = 112;
    bool use_cfeature = true;   // channel-attention branch
    bool use_skinmap = true;    // skin-map branch
    bool rescale_mask = true;   // multiply softmax mask by H'*W' so uniform == 1
    bool stsc_avg_pool = false; // average instead of max for the stack downsamples
    int64_t lffg_out = 32;
    int64_t stsc_out = 64;

    void validate() const;  // throws ConfigError

    // Temporal length after the two stride-2 downsamples. Odd intermediate
    // lengths are edge-replicated before pooling, so this is ceil(ceil(T/2)/2).
    int64_t t_reduced() const { return ((T + 1) / 2 + 1) / 2; }
    int64_t h_reduced() const { return H / 8; }
    int64_t w_reduced() const { return W / 8; }
};

// Named intermediates of one forward pass.
struct ForwardTrace {
    Tensor low;          // (32, T, H/2, W/2)
    Tensor high;         // (64, Tq, H/8, W/8)
    Tensor channel_map;  // (Tq, H/8, W/8), zeros when the branch is off
    Tensor skin_map;     // (Tq, H/8, W/8), zeros when the branch is off
    Tensor mask;         // (Tq, H/8, W/8)
    Tensor roi;          // (64, Tq, H/8, W/8)
    Tensor roi_up;       // (64, T, 1, 1) spatially aggregated
    std::vector<double> rppg;  // length T
};

// 2x2x2 pool that edge-replicates the last frame when the temporal dim is odd.
class EvenTimePool {
  public:
    explicit EvenTimePool(PoolKind kind) : kind_(kind) {}
    Tensor forward(const Tensor& x, bool cache);
    Tensor backward(const Tensor& grad_y);

  private:
    PoolKind kind_;
    bool padded_ = false;
    Tensor x_cache_;  // padded input
};

// Spatial 1x5x5 conv + max pool + two 3x3x3 conv blocks; 3 -> 32 channels.
class LowLevelStage {
  public:
    explicit LowLevelStage(const NetworkConfig& cfg);
    Tensor forward(const Tensor& clip, BnMode mode, bool cache);
    Tensor backward(const Tensor& grad_y);
    void init(std::mt19937_64& rng);
    void collect(std::vector<Parameter*>& out);
    std::vector<BatchNormLayer*> batchnorms();

  private:
    Conv3dLayer conv1_;
    BatchNormLayer bn1_;
    ReluLayer relu1_;
    Pool3dLayer pool_;
    Conv3dLayer conv2_;
    BatchNormLayer bn2_;
    ReluLayer relu2_;
    Conv3dLayer conv3_;
    BatchNormLayer bn3_;
    ReluLayer relu3_;
};

// Two serial blocks of (conv+bn+relu) x2 and a stride-2 downsample; 32 -> 64.
class StackedConvStage {
  public:
    explicit StackedConvStage(const NetworkConfig& cfg);
    Tensor forward(const Tensor& low, BnMode mode, bool cache);
    Tensor backward(const Tensor& grad_y);
    void init(std::mt19937_64& rng);
    void collect(std::vector<Parameter*>& out);
    std::vector<BatchNormLayer*> batchnorms();

  private:
    struct Block {
        Block(const std::string& name, int64_t in_ch, int64_t out_ch, PoolKind pool_kind);
        Conv3dLayer conv1;
        BatchNormLayer bn1;
        ReluLayer relu1;
        Conv3dLayer conv2;
        BatchNormLayer bn2;
        ReluLayer relu2;
        EvenTimePool down;
    };
    Block block1_, block2_;
};

// Channel max/avg collapse through a shared two-layer 1x1 bottleneck, summed,
// then sigmoid; emits a spatial attention map from the high-level features.
class ChannelAttention {
  public:
    ChannelAttention(int64_t channels, int64_t hidden);
    Tensor forward(const Tensor& high, bool cache);  // -> (Tq, H', W')
    Tensor backward(const Tensor& grad_out);         // -> grad wrt high
    void init(std::mt19937_64& rng);
    void collect(std::vector<Parameter*>& out);

    Parameter w1, b1, w2, b2;

  private:
    Tensor mlp_forward(const Tensor& z, bool cache, int path);
    Tensor mlp_backward(const Tensor& grad, int path);

    int64_t channels_;
    ConvSpec spec1_, spec2_;
    Tensor y_cache_;                 // sigmoid output
    Tensor z_cache_[2], h_cache_[2], a_cache_[2];
    std::vector<int64_t> argmax_;    // winning channel per position (max path)
};

// Residual block + 1x3x3 projection + sigmoid + two average downsamples.
class SkinMapGenerator {
  public:
    explicit SkinMapGenerator(const NetworkConfig& cfg);
    Tensor forward(const Tensor& low, bool cache);  // -> (Tq, H/8, W/8)
    Tensor backward(const Tensor& grad_out);        // -> grad wrt low
    void init(std::mt19937_64& rng);
    void collect(std::vector<Parameter*>& out);

  private:
    Conv3dLayer body1_, body2_, skip_, out_;
    ReluLayer relu_;
    SigmoidLayer sig_;
    EvenTimePool pool1_, pool2_;
};

// M = softmax(channel_map + skin_map) (optionally rescaled); roi_c = high_c * M.
class FeatureFusion {
  public:
    explicit FeatureFusion(const NetworkConfig& cfg);
    struct Out {
        Tensor mask;
        Tensor roi;
    };
    Out forward(const Tensor& high, const Tensor& channel_map, const Tensor& skin_map,
                bool cache);
    struct Grads {
        Tensor high;
        Tensor channel_map;  // empty when the branch is off
        Tensor skin_map;
    };
    Grads backward(const Tensor& grad_roi);

  private:
    bool use_cfeature_, use_skinmap_, rescale_;
    Tensor softmax_cache_, mask_cache_, high_cache_;
};

// Two temporal x2 transposed convolutions, crop to T, spatial global average,
// 1x1x1 projection to the signal.
class SignalHead {
  public:
    explicit SignalHead(const NetworkConfig& cfg);
    struct Out {
        Tensor roi_up;  // (64, T, 1, 1)
        std::vector<double> rppg;
    };
    Out forward(const Tensor& roi, bool cache);
    Tensor backward(const std::vector<double>& grad_rppg);  // -> grad wrt roi
    void init(std::mt19937_64& rng);
    void collect(std::vector<Parameter*>& out);

  private:
    int64_t target_t_;
    TransposedConv3dLayer up1_, up2_;
    Conv3dLayer proj_;
    Shape pre_crop_shape_;
    Shape cropped_shape_;
    Tensor pooled_cache_;
};

class Network {
  public:
    explicit Network(NetworkConfig cfg);

    void init_params(uint64_t seed);

    // training=true runs batchnorm in train mode, updates running statistics
    // and keeps activation caches for backward.
    ForwardTrace forward(const Tensor& clip, bool training);

    // grad_rppg: dL/d rppg. grad_skin (optional): dL/d skin_map, accumulated
    // with the gradient flowing through the fusion mask. Returns dL/d clip.
    Tensor backward(const std::vector<double>& grad_rppg, const Tensor* grad_skin = nullptr);

    void zero_grads();
    std::vector<Parameter*> parameters();
    // Parameters plus batchnorm running statistics, for checkpointing.
    std::vector<std::pair<std::string, Tensor*>> state();

    const NetworkConfig& config() const { return cfg_; }

    LowLevelStage& low_stage() { return low_; }
    StackedConvStage& stack_stage() { return stack_; }
    ChannelAttention& attention_stage() { return catt_; }
    SkinMapGenerator& skin_stage() { return skin_; }
    FeatureFusion& fusion_stage() { return fusion_; }
    SignalHead& head_stage() { return head_; }

  private:
    NetworkConfig cfg_;
    LowLevelStage low_;
    StackedConvStage stack_;
    ChannelAttention catt_;
    SkinMapGenerator skin_;
    FeatureFusion fusion_;
    SignalHead head_;
};

// element-wise helpers shared by the stages
void add_inplace(Tensor& a, const Tensor& b);
Tensor reshaped(Tensor t, Shape shape);

}  // namespace rppg
