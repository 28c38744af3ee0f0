#include "rppg/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "rppg/errors.hpp"
#include "rppg/network.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint container assumes a little-endian host");

namespace rppg {

namespace {

constexpr char kMagic[8] = {'R', 'P', 'P', 'G', 'C', 'K', 'P', '1'};
constexpr uint32_t kVersion = 1;

template <class T>
void write_pod(std::ofstream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T read_pod(std::ifstream& in, const std::string& path) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw IoError("checkpoint " + path + ": truncated file");
    return value;
}

}  // namespace

void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, Tensor*>>& entries) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.write(kMagic, sizeof(kMagic));
    write_pod(out, kVersion);
    write_pod(out, static_cast<uint32_t>(entries.size()));
    for (const auto& [name, tensor] : entries) {
        write_pod(out, static_cast<uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_pod(out, static_cast<uint32_t>(tensor->rank()));
        for (int64_t d : tensor->shape()) write_pod(out, static_cast<uint64_t>(d));
        out.write(reinterpret_cast<const char*>(tensor->data()),
                  static_cast<std::streamsize>(tensor->numel() * sizeof(double)));
    }
    if (!out) throw IoError("write failure on " + path);
}

std::vector<CheckpointEntry> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw IoError("checkpoint " + path + ": bad magic");
    }
    const auto version = read_pod<uint32_t>(in, path);
    if (version != kVersion) {
        throw IoError("checkpoint " + path + ": unsupported version " + std::to_string(version));
    }
    const auto count = read_pod<uint32_t>(in, path);
    std::vector<CheckpointEntry> entries;
    entries.reserve(count);
    for (uint32_t i = 0; i < count; ++i) {
        const auto name_len = read_pod<uint32_t>(in, path);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        const auto rank = read_pod<uint32_t>(in, path);
        Shape shape(rank);
        for (uint32_t d = 0; d < rank; ++d) {
            shape[d] = static_cast<int64_t>(read_pod<uint64_t>(in, path));
        }
        std::vector<double> data(static_cast<size_t>(shape_numel(shape)));
        in.read(reinterpret_cast<char*>(data.data()),
                static_cast<std::streamsize>(data.size() * sizeof(double)));
        if (!in) throw IoError("checkpoint " + path + ": truncated tensor " + name);
        entries.push_back({std::move(name), Tensor(std::move(shape), std::move(data))});
    }
    return entries;
}

void save_network(const std::string& path, Network& net) {
    save_checkpoint(path, net.state());
}

void load_network(const std::string& path, Network& net) {
    auto entries = load_checkpoint(path);
    auto state = net.state();
    if (entries.size() != state.size()) {
        throw IoError("checkpoint " + path + ": has " + std::to_string(entries.size()) +
                      " tensors, network expects " + std::to_string(state.size()));
    }
    for (auto& [name, tensor] : state) {
        const CheckpointEntry* found = nullptr;
        for (const auto& e : entries) {
            if (e.name == name) {
                found = &e;
                break;
            }
        }
        if (found == nullptr) {
            throw IoError("checkpoint " + path + ": missing tensor " + name);
        }
        if (found->tensor.shape() != tensor->shape()) {
            throw IoError("checkpoint " + path + ": tensor " + name + " has shape " +
                          shape_to_string(found->tensor.shape()) + ", network expects " +
                          shape_to_string(tensor->shape()));
        }
        tensor->values() = found->tensor.values();
    }
}

}  // namespace rppg
