#include "rppg/network.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rppg/errors.hpp"
#include "rppg/parallel.hpp"

namespace rppg {

namespace {

constexpr int64_t kAttentionHidden = 8;

// Replicate the last frame so the temporal dim becomes even.
Tensor pad_time_replicate(const Tensor& x) {
    const int64_t C = x.dim(0), T = x.dim(1), H = x.dim(2), W = x.dim(3);
    Tensor out(Shape{C, T + 1, H, W});
    const int64_t plane = H * W;
    for (int64_t c = 0; c < C; ++c) {
        const double* src = x.data() + c * T * plane;
        double* dst = out.data() + c * (T + 1) * plane;
        std::copy(src, src + T * plane, dst);
        std::copy(src + (T - 1) * plane, src + T * plane, dst + T * plane);
    }
    return out;
}

Tensor pad_time_replicate_backward(const Tensor& grad_padded) {
    const int64_t C = grad_padded.dim(0), Tp = grad_padded.dim(1), H = grad_padded.dim(2),
                  W = grad_padded.dim(3);
    const int64_t T = Tp - 1;
    Tensor out(Shape{C, T, H, W});
    const int64_t plane = H * W;
    for (int64_t c = 0; c < C; ++c) {
        const double* src = grad_padded.data() + c * Tp * plane;
        double* dst = out.data() + c * T * plane;
        std::copy(src, src + T * plane, dst);
        for (int64_t i = 0; i < plane; ++i) dst[(T - 1) * plane + i] += src[T * plane + i];
    }
    return out;
}

}  // namespace

void add_inplace(Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("add_inplace: shape mismatch");
    double* ad = a.data();
    const double* bd = b.data();
    for (int64_t i = 0; i < a.numel(); ++i) ad[i] += bd[i];
}

Tensor reshaped(Tensor t, Shape shape) {
    if (shape_numel(shape) != t.numel()) {
        throw std::invalid_argument("reshaped: element count mismatch");
    }
    return Tensor(std::move(shape), std::move(t.values()));
}

void NetworkConfig::validate() const {
    if (T < 4) throw ConfigError("config: T must be >= 4, got " + std::to_string(T));
    if (H < 16 || W < 16) {
        throw ConfigError("config: H and W must be >= 16, got " + std::to_string(H) + "x" +
                          std::to_string(W));
    }
    if (H % 8 != 0 || W % 8 != 0) {
        throw ConfigError("config: H and W must be divisible by 8, got " + std::to_string(H) +
                          "x" + std::to_string(W));
    }
    if (lffg_out < 1 || stsc_out < 1) throw ConfigError("config: channel widths must be >= 1");
}

Tensor EvenTimePool::forward(const Tensor& x, bool cache) {
    padded_ = (x.dim(1) % 2 != 0);
    const Tensor* in = &x;
    Tensor padded;
    if (padded_) {
        padded = pad_time_replicate(x);
        in = &padded;
    }
    if (cache) x_cache_ = *in;
    return pool3d(*in, kind_, Dims3{2, 2, 2}, Dims3{2, 2, 2});
}

Tensor EvenTimePool::backward(const Tensor& grad_y) {
    Tensor g = pool3d_backward(grad_y, x_cache_, kind_, Dims3{2, 2, 2}, Dims3{2, 2, 2});
    if (padded_) return pad_time_replicate_backward(g);
    return g;
}

// ---------------------------------------------------------------- LowLevelStage

LowLevelStage::LowLevelStage(const NetworkConfig& cfg)
    : conv1_("low.conv1", 3, cfg.lffg_out, Dims3{1, 5, 5}, Dims3{1, 1, 1}, Dims3{0, 2, 2}),
      bn1_("low.bn1", cfg.lffg_out),
      pool_(PoolKind::Max, Dims3{1, 2, 2}, Dims3{1, 2, 2}),
      conv2_("low.conv2", cfg.lffg_out, cfg.lffg_out, Dims3{3, 3, 3}, Dims3{1, 1, 1},
             Dims3{1, 1, 1}),
      bn2_("low.bn2", cfg.lffg_out),
      conv3_("low.conv3", cfg.lffg_out, cfg.lffg_out, Dims3{3, 3, 3}, Dims3{1, 1, 1},
             Dims3{1, 1, 1}),
      bn3_("low.bn3", cfg.lffg_out) {}

Tensor LowLevelStage::forward(const Tensor& clip, BnMode mode, bool cache) {
    Tensor t = relu1_.forward(bn1_.forward(conv1_.forward(clip, cache), mode, cache), cache);
    t = pool_.forward(t, cache);
    t = relu2_.forward(bn2_.forward(conv2_.forward(t, cache), mode, cache), cache);
    t = relu3_.forward(bn3_.forward(conv3_.forward(t, cache), mode, cache), cache);
    return t;
}

Tensor LowLevelStage::backward(const Tensor& grad_y) {
    Tensor g = conv3_.backward(bn3_.backward(relu3_.backward(grad_y)));
    g = conv2_.backward(bn2_.backward(relu2_.backward(g)));
    g = pool_.backward(g);
    g = conv1_.backward(bn1_.backward(relu1_.backward(g)));
    return g;
}

void LowLevelStage::init(std::mt19937_64& rng) {
    conv1_.init(rng);
    conv2_.init(rng);
    conv3_.init(rng);
}

void LowLevelStage::collect(std::vector<Parameter*>& out) {
    conv1_.collect(out);
    bn1_.collect(out);
    conv2_.collect(out);
    bn2_.collect(out);
    conv3_.collect(out);
    bn3_.collect(out);
}

std::vector<BatchNormLayer*> LowLevelStage::batchnorms() { return {&bn1_, &bn2_, &bn3_}; }

// ------------------------------------------------------------- StackedConvStage

StackedConvStage::Block::Block(const std::string& name, int64_t in_ch, int64_t out_ch,
                               PoolKind pool_kind)
    : conv1(name + ".conv1", in_ch, out_ch, Dims3{3, 3, 3}, Dims3{1, 1, 1}, Dims3{1, 1, 1}),
      bn1(name + ".bn1", out_ch),
      conv2(name + ".conv2", out_ch, out_ch, Dims3{3, 3, 3}, Dims3{1, 1, 1}, Dims3{1, 1, 1}),
      bn2(name + ".bn2", out_ch),
      down(pool_kind) {}

StackedConvStage::StackedConvStage(const NetworkConfig& cfg)
    : block1_("stack.b1", cfg.lffg_out, cfg.stsc_out,
              cfg.stsc_avg_pool ? PoolKind::Avg : PoolKind::Max),
      block2_("stack.b2", cfg.stsc_out, cfg.stsc_out,
              cfg.stsc_avg_pool ? PoolKind::Avg : PoolKind::Max) {}

Tensor StackedConvStage::forward(const Tensor& low, BnMode mode, bool cache) {
    Tensor t = low;
    for (Block* blk : {&block1_, &block2_}) {
        t = blk->relu1.forward(blk->bn1.forward(blk->conv1.forward(t, cache), mode, cache), cache);
        t = blk->relu2.forward(blk->bn2.forward(blk->conv2.forward(t, cache), mode, cache), cache);
        t = blk->down.forward(t, cache);
    }
    return t;
}

Tensor StackedConvStage::backward(const Tensor& grad_y) {
    Tensor g = grad_y;
    for (Block* blk : {&block2_, &block1_}) {
        g = blk->down.backward(g);
        g = blk->conv2.backward(blk->bn2.backward(blk->relu2.backward(g)));
        g = blk->conv1.backward(blk->bn1.backward(blk->relu1.backward(g)));
    }
    return g;
}

void StackedConvStage::init(std::mt19937_64& rng) {
    block1_.conv1.init(rng);
    block1_.conv2.init(rng);
    block2_.conv1.init(rng);
    block2_.conv2.init(rng);
}

void StackedConvStage::collect(std::vector<Parameter*>& out) {
    for (Block* blk : {&block1_, &block2_}) {
        blk->conv1.collect(out);
        blk->bn1.collect(out);
        blk->conv2.collect(out);
        blk->bn2.collect(out);
    }
}

std::vector<BatchNormLayer*> StackedConvStage::batchnorms() {
    return {&block1_.bn1, &block1_.bn2, &block2_.bn1, &block2_.bn2};
}

// ------------------------------------------------------------- ChannelAttention

ChannelAttention::ChannelAttention(int64_t channels, int64_t hidden) : channels_(channels) {
    spec1_.kernel = {1, 1, 1};
    spec1_.in_channels = 1;
    spec1_.out_channels = hidden;
    spec2_.kernel = {1, 1, 1};
    spec2_.in_channels = hidden;
    spec2_.out_channels = 1;
    w1 = Parameter("catt.fc1.w", Shape{hidden, 1, 1, 1, 1});
    b1 = Parameter("catt.fc1.b", Shape{hidden});
    w2 = Parameter("catt.fc2.w", Shape{1, hidden, 1, 1, 1});
    b2 = Parameter("catt.fc2.b", Shape{1});
}

Tensor ChannelAttention::mlp_forward(const Tensor& z, bool cache, int path) {
    Tensor h = conv3d(z, w1.value, b1.value, spec1_);
    Tensor a = relu(h);
    Tensor o = conv3d(a, w2.value, b2.value, spec2_);
    if (cache) {
        z_cache_[path] = z;
        h_cache_[path] = std::move(h);
        a_cache_[path] = std::move(a);
    }
    return o;
}

Tensor ChannelAttention::mlp_backward(const Tensor& grad, int path) {
    Conv3dGrads g2 = conv3d_backward(grad, a_cache_[path], w2.value, spec2_);
    for (int64_t i = 0; i < w2.value.numel(); ++i) w2.value.grad()[i] += g2.w[i];
    for (int64_t i = 0; i < b2.value.numel(); ++i) b2.value.grad()[i] += g2.b[i];
    Tensor gh = relu_backward(g2.x, h_cache_[path]);
    Conv3dGrads g1 = conv3d_backward(gh, z_cache_[path], w1.value, spec1_);
    for (int64_t i = 0; i < w1.value.numel(); ++i) w1.value.grad()[i] += g1.w[i];
    for (int64_t i = 0; i < b1.value.numel(); ++i) b1.value.grad()[i] += g1.b[i];
    return std::move(g1.x);
}

Tensor ChannelAttention::forward(const Tensor& high, bool cache) {
    const int64_t C = high.dim(0), T = high.dim(1), H = high.dim(2), W = high.dim(3);
    const int64_t vol = T * H * W;
    Tensor cmax(Shape{1, T, H, W});
    Tensor cavg(Shape{1, T, H, W});
    if (cache) argmax_.assign(static_cast<size_t>(vol), 0);
    const double inv_c = 1.0 / static_cast<double>(C);
    for (int64_t i = 0; i < vol; ++i) {
        double best = high[i];
        int64_t best_c = 0;
        double acc = 0.0;
        for (int64_t c = 0; c < C; ++c) {
            const double v = high[c * vol + i];
            acc += v;
            if (v > best) {
                best = v;
                best_c = c;
            }
        }
        cmax[i] = best;
        cavg[i] = acc * inv_c;
        if (cache) argmax_[static_cast<size_t>(i)] = best_c;
    }

    Tensor s = mlp_forward(cmax, cache, 0);
    add_inplace(s, mlp_forward(cavg, cache, 1));
    Tensor y = sigmoid(s);
    if (cache) y_cache_ = y;
    return reshaped(std::move(y), Shape{T, H, W});
}

Tensor ChannelAttention::backward(const Tensor& grad_out) {
    const int64_t T = grad_out.dim(0), H = grad_out.dim(1), W = grad_out.dim(2);
    const int64_t vol = T * H * W;
    Tensor gs(Shape{1, T, H, W});
    for (int64_t i = 0; i < vol; ++i) {
        const double y = y_cache_[i];
        gs[i] = grad_out[i] * y * (1.0 - y);
    }
    Tensor gmax = mlp_backward(gs, 0);
    Tensor gavg = mlp_backward(gs, 1);

    Tensor ghigh(Shape{channels_, T, H, W});
    const double inv_c = 1.0 / static_cast<double>(channels_);
    for (int64_t i = 0; i < vol; ++i) {
        const double spread = gavg[i] * inv_c;
        for (int64_t c = 0; c < channels_; ++c) ghigh[c * vol + i] += spread;
        ghigh[argmax_[static_cast<size_t>(i)] * vol + i] += gmax[i];
    }
    return ghigh;
}

void ChannelAttention::init(std::mt19937_64& rng) {
    kaiming_init(w1.value, 1, rng);
    kaiming_init(w2.value, spec2_.in_channels, rng);
    w1.value.zero_grad();
    w2.value.zero_grad();
    b1.value.fill(0.0);
    b1.value.zero_grad();
    b2.value.fill(0.0);
    b2.value.zero_grad();
}

void ChannelAttention::collect(std::vector<Parameter*>& out) {
    out.push_back(&w1);
    out.push_back(&b1);
    out.push_back(&w2);
    out.push_back(&b2);
}

// ------------------------------------------------------------- SkinMapGenerator

SkinMapGenerator::SkinMapGenerator(const NetworkConfig& cfg)
    : body1_("skin.body1", cfg.lffg_out, cfg.lffg_out, Dims3{1, 3, 3}, Dims3{1, 1, 1},
             Dims3{0, 1, 1}),
      body2_("skin.body2", cfg.lffg_out, cfg.lffg_out, Dims3{1, 3, 3}, Dims3{1, 1, 1},
             Dims3{0, 1, 1}),
      skip_("skin.skip", cfg.lffg_out, cfg.lffg_out, Dims3{1, 1, 1}, Dims3{1, 1, 1},
            Dims3{0, 0, 0}),
      out_("skin.out", cfg.lffg_out, 1, Dims3{1, 3, 3}, Dims3{1, 1, 1}, Dims3{0, 1, 1}),
      pool1_(PoolKind::Avg),
      pool2_(PoolKind::Avg) {}

Tensor SkinMapGenerator::forward(const Tensor& low, bool cache) {
    Tensor r = body2_.forward(relu_.forward(body1_.forward(low, cache), cache), cache);
    add_inplace(r, skip_.forward(low, cache));
    Tensor m = sig_.forward(out_.forward(r, cache), cache);
    Tensor p = pool2_.forward(pool1_.forward(m, cache), cache);
    return reshaped(std::move(p), Shape{p.dim(1), p.dim(2), p.dim(3)});
}

Tensor SkinMapGenerator::backward(const Tensor& grad_out) {
    Tensor g = reshaped(grad_out, Shape{1, grad_out.dim(0), grad_out.dim(1), grad_out.dim(2)});
    g = pool1_.backward(pool2_.backward(g));
    g = out_.backward(sig_.backward(g));
    Tensor g_low = skip_.backward(g);
    Tensor g_body = body1_.backward(relu_.backward(body2_.backward(g)));
    add_inplace(g_low, g_body);
    return g_low;
}

void SkinMapGenerator::init(std::mt19937_64& rng) {
    body1_.init(rng);
    body2_.init(rng);
    skip_.init(rng);
    out_.init(rng);
}

void SkinMapGenerator::collect(std::vector<Parameter*>& out) {
    body1_.collect(out);
    body2_.collect(out);
    skip_.collect(out);
    out_.collect(out);
}

// --------------------------------------------------------------- FeatureFusion

FeatureFusion::FeatureFusion(const NetworkConfig& cfg)
    : use_cfeature_(cfg.use_cfeature), use_skinmap_(cfg.use_skinmap),
      rescale_(cfg.rescale_mask) {}

FeatureFusion::Out FeatureFusion::forward(const Tensor& high, const Tensor& channel_map,
                                          const Tensor& skin_map, bool cache) {
    const int64_t C = high.dim(0), T = high.dim(1), H = high.dim(2), W = high.dim(3);
    Out out;
    if (!use_cfeature_ && !use_skinmap_) {
        // both branches off: the mask is exactly uniform
        out.mask = Tensor::full(Shape{T, H, W}, 1.0);
        out.roi = high;
        if (cache) {
            high_cache_ = high;
            mask_cache_ = out.mask;
            softmax_cache_ = Tensor();
        }
        return out;
    }

    Tensor fused(Shape{T, H, W});
    if (use_cfeature_) add_inplace(fused, channel_map);
    if (use_skinmap_) add_inplace(fused, skin_map);

    Tensor sm = softmax_spatial(fused);
    const double scale = rescale_ ? static_cast<double>(H * W) : 1.0;
    out.mask = Tensor(Shape{T, H, W});
    for (int64_t i = 0; i < sm.numel(); ++i) out.mask[i] = sm[i] * scale;

    out.roi = Tensor(high.shape());
    const int64_t vol = T * H * W;
    for (int64_t c = 0; c < C; ++c) {
        const double* hc = high.data() + c * vol;
        double* rc = out.roi.data() + c * vol;
        for (int64_t i = 0; i < vol; ++i) rc[i] = hc[i] * out.mask[i];
    }

    if (cache) {
        softmax_cache_ = std::move(sm);
        mask_cache_ = out.mask;
        high_cache_ = high;
    }
    return out;
}

FeatureFusion::Grads FeatureFusion::backward(const Tensor& grad_roi) {
    const int64_t C = high_cache_.dim(0);
    const int64_t T = mask_cache_.dim(0), H = mask_cache_.dim(1), W = mask_cache_.dim(2);
    const int64_t vol = T * H * W;

    Grads g;
    g.high = Tensor(high_cache_.shape());
    Tensor gmask(Shape{T, H, W});
    for (int64_t c = 0; c < C; ++c) {
        const double* gr = grad_roi.data() + c * vol;
        const double* hc = high_cache_.data() + c * vol;
        double* gh = g.high.data() + c * vol;
        for (int64_t i = 0; i < vol; ++i) {
            gh[i] = gr[i] * mask_cache_[i];
            gmask[i] += gr[i] * hc[i];
        }
    }
    if (!use_cfeature_ && !use_skinmap_) return g;

    const double scale =
        rescale_ ? static_cast<double>(mask_cache_.dim(1) * mask_cache_.dim(2)) : 1.0;
    for (int64_t i = 0; i < gmask.numel(); ++i) gmask[i] *= scale;
    Tensor gfused = softmax_spatial_backward(gmask, softmax_cache_);
    if (use_cfeature_) g.channel_map = gfused;
    if (use_skinmap_) g.skin_map = std::move(gfused);
    return g;
}

// ----------------------------------------------------------------- SignalHead

SignalHead::SignalHead(const NetworkConfig& cfg)
    : target_t_(cfg.T),
      up1_("head.up1", cfg.stsc_out, cfg.stsc_out, Dims3{4, 1, 1}, Dims3{2, 1, 1},
           Dims3{1, 0, 0}),
      up2_("head.up2", cfg.stsc_out, cfg.stsc_out, Dims3{4, 1, 1}, Dims3{2, 1, 1},
           Dims3{1, 0, 0}),
      proj_("head.proj", cfg.stsc_out, 1, Dims3{1, 1, 1}, Dims3{1, 1, 1}, Dims3{0, 0, 0}) {}

SignalHead::Out SignalHead::forward(const Tensor& roi, bool cache) {
    Tensor a = up1_.forward(roi, cache);
    if (a.dim(1) != 2 * roi.dim(1)) {
        throw ConfigError("signal head: upsampling did not double the temporal length");
    }
    Tensor b = up2_.forward(a, cache);
    if (b.dim(1) != 2 * a.dim(1)) {
        throw ConfigError("signal head: upsampling did not double the temporal length");
    }
    if (b.dim(1) < target_t_) {
        throw ConfigError("signal head: restored length " + std::to_string(b.dim(1)) +
                          " is shorter than the clip length " + std::to_string(target_t_));
    }

    // crop the replicate-padding surplus, then aggregate space
    const int64_t C = b.dim(0), Tb = b.dim(1), H = b.dim(2), W = b.dim(3);
    pre_crop_shape_ = b.shape();
    Tensor pooled(Shape{C, target_t_, 1, 1});
    const double inv_hw = 1.0 / static_cast<double>(H * W);
    for (int64_t c = 0; c < C; ++c) {
        for (int64_t t = 0; t < target_t_; ++t) {
            const double* plane = b.data() + (c * Tb + t) * H * W;
            double acc = 0.0;
            for (int64_t i = 0; i < H * W; ++i) acc += plane[i];
            pooled(c, t, 0, 0) = acc * inv_hw;
        }
    }
    if (cache) pooled_cache_ = pooled;

    Tensor s = proj_.forward(pooled, cache);
    Out out;
    out.roi_up = std::move(pooled);
    out.rppg.resize(static_cast<size_t>(target_t_));
    for (int64_t t = 0; t < target_t_; ++t) out.rppg[static_cast<size_t>(t)] = s(0, t, 0, 0);
    return out;
}

Tensor SignalHead::backward(const std::vector<double>& grad_rppg) {
    if (static_cast<int64_t>(grad_rppg.size()) != target_t_) {
        throw std::invalid_argument("signal head backward: gradient length mismatch");
    }
    Tensor gs(Shape{1, target_t_, 1, 1});
    for (int64_t t = 0; t < target_t_; ++t) gs(0, t, 0, 0) = grad_rppg[static_cast<size_t>(t)];
    Tensor gpooled = proj_.backward(gs);

    const int64_t C = pre_crop_shape_[0], Tb = pre_crop_shape_[1], H = pre_crop_shape_[2],
                  W = pre_crop_shape_[3];
    Tensor gb(Shape{C, Tb, H, W});
    const double inv_hw = 1.0 / static_cast<double>(H * W);
    for (int64_t c = 0; c < C; ++c) {
        for (int64_t t = 0; t < target_t_; ++t) {
            const double spread = gpooled(c, t, 0, 0) * inv_hw;
            double* plane = gb.data() + (c * Tb + t) * H * W;
            for (int64_t i = 0; i < H * W; ++i) plane[i] = spread;
        }
    }
    return up1_.backward(up2_.backward(gb));
}

void SignalHead::init(std::mt19937_64& rng) {
    up1_.init(rng);
    up2_.init(rng);
    proj_.init(rng);
}

void SignalHead::collect(std::vector<Parameter*>& out) {
    up1_.collect(out);
    up2_.collect(out);
    proj_.collect(out);
}

// -------------------------------------------------------------------- Network

Network::Network(NetworkConfig cfg)
    : cfg_((cfg.validate(), cfg)),
      low_(cfg_),
      stack_(cfg_),
      catt_(cfg_.stsc_out, kAttentionHidden),
      skin_(cfg_),
      fusion_(cfg_),
      head_(cfg_) {}

void Network::init_params(uint64_t seed) {
    std::mt19937_64 rng(seed);
    low_.init(rng);
    stack_.init(rng);
    catt_.init(rng);
    skin_.init(rng);
    head_.init(rng);
    auto reset_bn = [](BatchNormLayer* bn) {
        bn->gamma.value.fill(1.0);
        bn->beta.value.fill(0.0);
        bn->running_mean.fill(0.0);
        bn->running_var.fill(1.0);
    };
    for (BatchNormLayer* bn : low_.batchnorms()) reset_bn(bn);
    for (BatchNormLayer* bn : stack_.batchnorms()) reset_bn(bn);
    zero_grads();
}

ForwardTrace Network::forward(const Tensor& clip, bool training) {
    if (clip.rank() != 4 || clip.dim(0) != 3 || clip.dim(1) != cfg_.T || clip.dim(2) != cfg_.H ||
        clip.dim(3) != cfg_.W) {
        throw std::invalid_argument("network: clip shape " + shape_to_string(clip.shape()) +
                                    " does not match config (3," + std::to_string(cfg_.T) + "," +
                                    std::to_string(cfg_.H) + "," + std::to_string(cfg_.W) + ")");
    }
    const BnMode mode = training ? BnMode::Train : BnMode::Eval;
    const Shape reduced{cfg_.t_reduced(), cfg_.h_reduced(), cfg_.w_reduced()};

    ForwardTrace trace;
    trace.low = low_.forward(clip, mode, training);
    trace.high = stack_.forward(trace.low, mode, training);
    trace.channel_map =
        cfg_.use_cfeature ? catt_.forward(trace.high, training) : Tensor(reduced);
    trace.skin_map = cfg_.use_skinmap ? skin_.forward(trace.low, training) : Tensor(reduced);
    FeatureFusion::Out fused =
        fusion_.forward(trace.high, trace.channel_map, trace.skin_map, training);
    trace.mask = std::move(fused.mask);
    trace.roi = std::move(fused.roi);
    SignalHead::Out head_out = head_.forward(trace.roi, training);
    trace.roi_up = std::move(head_out.roi_up);
    trace.rppg = std::move(head_out.rppg);
    return trace;
}

Tensor Network::backward(const std::vector<double>& grad_rppg, const Tensor* grad_skin) {
    Tensor g_roi = head_.backward(grad_rppg);
    FeatureFusion::Grads fg = fusion_.backward(g_roi);

    Tensor g_high = std::move(fg.high);
    if (cfg_.use_cfeature) add_inplace(g_high, catt_.backward(fg.channel_map));

    Tensor g_low = stack_.backward(g_high);
    if (cfg_.use_skinmap) {
        Tensor g_skin_total = std::move(fg.skin_map);
        if (grad_skin != nullptr) add_inplace(g_skin_total, *grad_skin);
        add_inplace(g_low, skin_.backward(g_skin_total));
    }
    return low_.backward(g_low);
}

void Network::zero_grads() {
    for (Parameter* p : parameters()) p->value.zero_grad();
}

std::vector<Parameter*> Network::parameters() {
    std::vector<Parameter*> out;
    low_.collect(out);
    stack_.collect(out);
    catt_.collect(out);
    skin_.collect(out);
    head_.collect(out);
    return out;
}

std::vector<std::pair<std::string, Tensor*>> Network::state() {
    std::vector<std::pair<std::string, Tensor*>> out;
    for (Parameter* p : parameters()) out.emplace_back(p->name, &p->value);
    auto add_bn = [&](BatchNormLayer* bn) {
        out.emplace_back(bn->gamma.name.substr(0, bn->gamma.name.size() - 6) + ".running_mean",
                         &bn->running_mean);
        out.emplace_back(bn->gamma.name.substr(0, bn->gamma.name.size() - 6) + ".running_var",
                         &bn->running_var);
    };
    for (BatchNormLayer* bn : low_.batchnorms()) add_bn(bn);
    for (BatchNormLayer* bn : stack_.batchnorms()) add_bn(bn);
    return out;
}

}  // namespace rppg
