#pragma once

#include <cstdint>
#include <string>

#include "rppg/losses.hpp"
#include "rppg/network.hpp"

namespace rppg {

// Run settings parsed from a "key = value" config file. Missing keys keep
// their defaults; unknown keys are rejected.
struct RunConfig {
    NetworkConfig network;
    LossWeights weights;
    double lr = 1e-4;
    int64_t epochs = 80;
    int64_t batch_size = 1;
    uint64_t seed = 1;
    FreqLogits freq_logits = FreqLogits::RawPsd;
    bool use_frequency_loss = true;  // loss-ablation switches
    bool use_skin_loss = true;
};

RunConfig read_run_config(const std::string& path);
void write_run_config(const std::string& path, const RunConfig& config);

}  // namespace rppg
