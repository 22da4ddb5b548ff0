#include "hsnn/spiketrace.hpp"

#include <cstring>
#include <fstream>

#include "hsnn/error.hpp"

namespace hsnn {

namespace {

constexpr char kMagic[8] = {'H', 'S', 'N', 'N', 'S', 'P', 'K', '1'};

void write_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

SpikeTrace pack_spike_trace(const std::string& layer, const std::vector<Tensor>& spikes) {
    if (spikes.empty()) throw_input("cannot pack an empty spike trace");
    SpikeTrace trace;
    trace.layer = layer;
    trace.neurons = spikes[0].size();
    trace.timesteps = static_cast<int>(spikes.size());
    const std::int64_t total = trace.neurons * trace.timesteps;
    trace.bits.assign(static_cast<std::size_t>((total + 7) / 8), 0);
    for (int t = 0; t < trace.timesteps; ++t) {
        const Tensor& o = spikes[static_cast<std::size_t>(t)];
        if (o.size() != trace.neurons) throw_input("spike tensors disagree on neuron count");
        for (std::int64_t n = 0; n < trace.neurons; ++n) {
            if (o[n] != 0.0) {
                const std::int64_t idx = static_cast<std::int64_t>(t) * trace.neurons + n;
                trace.bits[static_cast<std::size_t>(idx >> 3)] |=
                    static_cast<std::uint8_t>(1u << (idx & 7));
            }
        }
    }
    return trace;
}

std::vector<SpikeTrace> traces_from_record(const SpikeRecord& record) {
    std::vector<SpikeTrace> traces;
    for (std::size_t l = 0; l < record.layer_names.size(); ++l) {
        traces.push_back(pack_spike_trace(record.layer_names[l], record.spikes[l]));
    }
    return traces;
}

void write_spike_traces(const std::filesystem::path& path, const std::vector<SpikeTrace>& traces) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw_io("cannot write spike trace file " + path.string());
    out.write(kMagic, sizeof(kMagic));
    write_u32(out, static_cast<std::uint32_t>(traces.size()));
    for (const SpikeTrace& t : traces) {
        write_u32(out, static_cast<std::uint32_t>(t.layer.size()));
        out.write(t.layer.data(), static_cast<std::streamsize>(t.layer.size()));
        write_u32(out, static_cast<std::uint32_t>(t.neurons));
        write_u32(out, static_cast<std::uint32_t>(t.timesteps));
        out.write(reinterpret_cast<const char*>(t.bits.data()),
                  static_cast<std::streamsize>(t.bits.size()));
    }
    if (!out) throw_io("short write to spike trace file " + path.string());
}

std::vector<SpikeTrace> read_spike_traces(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw_io("cannot open spike trace file " + path.string());
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0) {
        throw_io("bad spike trace magic in " + path.string());
    }
    const std::uint32_t count = read_u32(in);
    std::vector<SpikeTrace> traces;
    for (std::uint32_t i = 0; i < count; ++i) {
        SpikeTrace t;
        const std::uint32_t name_len = read_u32(in);
        t.layer.resize(name_len);
        in.read(t.layer.data(), name_len);
        t.neurons = read_u32(in);
        t.timesteps = static_cast<int>(read_u32(in));
        const std::int64_t total = t.neurons * t.timesteps;
        t.bits.resize(static_cast<std::size_t>((total + 7) / 8));
        in.read(reinterpret_cast<char*>(t.bits.data()),
                static_cast<std::streamsize>(t.bits.size()));
        if (!in) throw_io("truncated spike trace file " + path.string());
        traces.push_back(std::move(t));
    }
    return traces;
}

}  // namespace hsnn
