#pragma once

#include <string>
#include <utility>
#include <vector>

#include "rppg/tensor.hpp"

namespace rppg {

class Network;

// Flat binary parameter container; layout documented byte-exactly in
// docs/formats.md. Little-endian throughout.
struct CheckpointEntry {
    std::string name;
    Tensor tensor;
};

void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, Tensor*>>& entries);
std::vector<CheckpointEntry> load_checkpoint(const std::string& path);

void save_network(const std::string& path, Network& net);
// Matches entries to network state by name; any missing name or shape
// mismatch is an error naming the offender.
void load_network(const std::string& path, Network& net);

}  // namespace rppg
