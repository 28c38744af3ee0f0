#pragma once

#include <string>
#include <vector>

#include "rppg/config.hpp"
#include "rppg/dsp.hpp"
#include "rppg/network.hpp"

namespace rppg {

struct TrainClip {
    std::string id;
    Tensor clip;        // (3, T, H, W)
    RppgSignal ppg;     // aligned ground truth, length T
    double hr_bpm = 0.0;
    Tensor skin_label;  // downsampled (Tq, H/8, W/8); empty when unavailable
};

struct TrainOptions {
    double lr = 1e-4;
    int64_t epochs = 80;
    int64_t batch_size = 1;
    LossWeights weights;
    uint64_t seed = 1;
    FreqLogits freq_logits = FreqLogits::RawPsd;
    bool use_frequency_loss = true;
    bool use_skin_loss = true;
    double early_stop_pearson = -1.0;  // stop once the train L_r drops below; < 0 disables
    std::string loss_csv_path;         // per-epoch curve, empty to skip
    bool verbose = false;
};

struct EpochStats {
    double pearson = 0.0;
    double frequency = 0.0;
    double skin = 0.0;
    double total = 0.0;
};

struct TrainResult {
    std::vector<EpochStats> history;
    double best_val_pearson = 2.0;
    int64_t best_epoch = -1;  // -1 = initialization
};

// Per-epoch full passes with Adam updates; checkpoints (in memory) at the
// best validation L_r and restores that state before returning. Throws
// DivergenceError naming the epoch and clip on a non-finite loss.
TrainResult train_network(Network& net, const std::vector<TrainClip>& train_set,
                          const std::vector<TrainClip>& val_set, const TrainOptions& options);

}  // namespace rppg
