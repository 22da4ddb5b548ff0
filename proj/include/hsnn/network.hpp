#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hsnn/neuron.hpp"
#include "hsnn/ops.hpp"
#include "hsnn/quant.hpp"
#include "hsnn/rng.hpp"
#include "hsnn/tensor.hpp"

namespace hsnn {

enum class LayerKind { conv3d, conv2d, avgpool2d, dropout, linear, classifier };
enum class NetworkMode { ann, snn };

const char* layer_kind_name(LayerKind k);
LayerKind layer_kind_from_name(const std::string& name);
const char* network_mode_name(NetworkMode m);
NetworkMode network_mode_from_name(const std::string& name);

struct LayerSpec {
    LayerKind kind = LayerKind::linear;
    std::string name;
    Conv3dGeometry conv3d;
    Conv2dGeometry conv2d;
    Pool2dGeometry pool;
    double dropout_rate = 0.0;
    int in_features = 0;
    int out_features = 0;

    bool has_weights() const {
        return kind == LayerKind::conv3d || kind == LayerKind::conv2d ||
               kind == LayerKind::linear || kind == LayerKind::classifier;
    }
    // Hidden layers that carry an activation: ReLU in ANN mode, LIF in SNN mode.
    bool is_spiking() const {
        return kind == LayerKind::conv3d || kind == LayerKind::conv2d || kind == LayerKind::linear;
    }
};

struct InputDesc {
    int channels = 1;
    int bands = 0;
    int height = 0;
    int width = 0;

    std::vector<int> shape() const { return {channels, bands, height, width}; }
};

// Layers are bias-free throughout; average pooling and dropout are the only
// non-parameterized kinds.
struct NetworkSpec {
    std::string architecture = "custom";
    InputDesc input;
    int num_classes = 0;
    NetworkMode mode = NetworkMode::ann;
    int timesteps = 5;
    std::vector<LayerSpec> layers;
    std::vector<std::string> build_notes;
};

struct LayerIo {
    std::vector<int> in_shape;   // after any fold/flatten adaptation
    std::vector<int> out_shape;
    bool folded = false;     // rank-4 input merged (channels x spectral) for a 2-D layer
    bool flattened = false;  // input flattened for linear/classifier
};

// Walks the layer list validating geometry; errors carry a per-layer trace.
std::vector<LayerIo> propagate_shapes(const NetworkSpec& spec);

std::vector<int> layer_weight_shape(const LayerSpec& layer);
std::int64_t parameter_count(const NetworkSpec& spec);

struct NetworkWeights {
    std::vector<Tensor> tensors;  // indexed by layer; empty for layers without weights
};

NetworkWeights init_weights(const NetworkSpec& spec, Rng& rng);

// Table I builders. CNN-3D works on 5x5 patches, CNN-32H on 3x3 patches.
NetworkSpec build_cnn3d(int bands, int num_classes);
NetworkSpec build_cnn32h(int bands, int num_classes, int hidden_features = 128);

std::string network_spec_to_json(const NetworkSpec& spec);
NetworkSpec network_spec_from_json(const std::string& text);

// ---- forward execution ----

struct AnnTrace {
    std::vector<Tensor> inputs;    // per layer: kernel input (post fold/flatten)
    std::vector<Tensor> preacts;   // per layer: pre-activation output
    std::vector<Tensor> dropout_masks;
    std::vector<LayerIo> io;
};

Tensor ann_forward(const NetworkSpec& spec, const NetworkWeights& weights, const Tensor& patch,
                   bool training = false, Rng* dropout_rng = nullptr, AnnTrace* trace = nullptr);

struct SpikeRecord {
    std::vector<std::string> layer_names;        // spiking layers, network order
    std::vector<std::vector<Tensor>> spikes;     // [layer][t], binary tensors
    int timesteps = 0;
};

struct SnnLayerTrace {
    std::vector<Tensor> input;  // drive source seen by the kernel, per step
    std::vector<Tensor> u;      // membrane potential after the update, per step
    std::vector<Tensor> z;      // normalized potential, per step
    std::vector<Tensor> o;      // output spikes, per step
};

struct SnnTrace {
    Tensor encoded;                         // input presented at every step
    std::vector<SnnLayerTrace> spiking;     // per spiking layer
    std::vector<Tensor> classifier_inputs;  // flattened classifier input per step
    std::vector<Tensor> dropout_masks;      // per dropout layer, fixed across steps
    std::vector<LayerIo> io;
};

struct SnnOptions {
    int timesteps = 5;
    bool training = false;
    Rng* dropout_rng = nullptr;         // required when training and dropout present
    int potential_bits = 0;             // 0 disables membrane quantization
    const QuantParams* input_quant = nullptr;
    bool record_spikes = false;
    bool record_trace = false;
};

struct SnnForwardOut {
    Tensor potentials;  // output-layer membrane at the final step
    SpikeRecord record;
    SnnTrace trace;
};

// Unrolls the network over opts.timesteps with direct input encoding, LIF
// hidden layers, and an accumulate-only output layer. lif holds one entry per
// spiking layer in network order.
SnnForwardOut snn_forward(const NetworkSpec& spec, const NetworkWeights& weights,
                          const std::vector<LifParams>& lif, const Tensor& patch,
                          const SnnOptions& opts);

std::vector<int> spiking_layer_indices(const NetworkSpec& spec);
std::vector<std::string> spiking_layer_names(const NetworkSpec& spec);

}  // namespace hsnn
