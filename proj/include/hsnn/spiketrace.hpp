#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hsnn/network.hpp"

namespace hsnn {

// Packed spike trace of one layer: bit index t*neurons + n, packed LSB-first
// within each byte.
struct SpikeTrace {
    std::string layer;
    std::int64_t neurons = 0;
    int timesteps = 0;
    std::vector<std::uint8_t> bits;

    bool spike_at(int t, std::int64_t neuron) const {
        const std::int64_t idx = static_cast<std::int64_t>(t) * neurons + neuron;
        return (bits[static_cast<std::size_t>(idx >> 3)] >> (idx & 7)) & 1;
    }
};

SpikeTrace pack_spike_trace(const std::string& layer, const std::vector<Tensor>& spikes_per_step);
std::vector<SpikeTrace> traces_from_record(const SpikeRecord& record);

void write_spike_traces(const std::filesystem::path& path, const std::vector<SpikeTrace>& traces);
std::vector<SpikeTrace> read_spike_traces(const std::filesystem::path& path);

}  // namespace hsnn
