#pragma once

#include <filesystem>
#include <optional>

#include "hsnn/network.hpp"
#include "hsnn/quant.hpp"

namespace hsnn {

// A checkpoint is a directory: manifest.json plus one little-endian raw
// 64-bit-real blob per weight tensor.
struct Checkpoint {
    NetworkSpec spec;
    NetworkWeights weights;
    std::vector<std::optional<QuantParams>> weight_quant;  // per layer, aligned to spec.layers
    std::vector<double> leak;                              // per spiking layer (snn mode)
    std::optional<std::vector<double>> thresholds;         // absent until calibration
    std::optional<QuantParams> input_quant;                // input-layer activation params

    Checkpoint() = default;
    explicit Checkpoint(NetworkSpec s) : spec(std::move(s)) {
        weights.tensors.resize(spec.layers.size());
        weight_quant.resize(spec.layers.size());
    }
};

void save_checkpoint(const std::filesystem::path& dir, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace hsnn
