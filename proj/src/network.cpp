#include "hsnn/network.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "hsnn/error.hpp"

namespace hsnn {

using nlohmann::json;

const char* layer_kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::conv3d: return "conv3d";
        case LayerKind::conv2d: return "conv2d";
        case LayerKind::avgpool2d: return "avgpool2d";
        case LayerKind::dropout: return "dropout";
        case LayerKind::linear: return "linear";
        case LayerKind::classifier: return "classifier";
    }
    return "unknown";
}

LayerKind layer_kind_from_name(const std::string& name) {
    if (name == "conv3d") return LayerKind::conv3d;
    if (name == "conv2d") return LayerKind::conv2d;
    if (name == "avgpool2d") return LayerKind::avgpool2d;
    if (name == "dropout") return LayerKind::dropout;
    if (name == "linear") return LayerKind::linear;
    if (name == "classifier") return LayerKind::classifier;
    throw_config("unknown layer kind '" + name + "'");
}

const char* network_mode_name(NetworkMode m) { return m == NetworkMode::ann ? "ann" : "snn"; }

NetworkMode network_mode_from_name(const std::string& name) {
    if (name == "ann") return NetworkMode::ann;
    if (name == "snn") return NetworkMode::snn;
    throw_config("unknown network mode '" + name + "'");
}

std::vector<LayerIo> propagate_shapes(const NetworkSpec& spec) {
    if (spec.num_classes < 2) {
        throw_config("network needs at least 2 classes, got " + std::to_string(spec.num_classes));
    }
    std::vector<LayerIo> io;
    io.reserve(spec.layers.size());
    std::vector<int> cur = spec.input.shape();
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& layer = spec.layers[i];
        LayerIo entry;
        try {
            switch (layer.kind) {
                case LayerKind::conv3d: {
                    if (cur.size() != 4) {
                        throw_config("conv3d needs a rank-4 input, have " + shape_to_string(cur));
                    }
                    entry.in_shape = cur;
                    entry.out_shape = conv3d_out_shape(cur, layer.conv3d);
                    break;
                }
                case LayerKind::conv2d: {
                    if (cur.size() == 4) {
                        cur = {cur[0] * cur[1], cur[2], cur[3]};
                        entry.folded = true;
                    }
                    entry.in_shape = cur;
                    entry.out_shape = conv2d_out_shape(cur, layer.conv2d);
                    break;
                }
                case LayerKind::avgpool2d: {
                    entry.in_shape = cur;
                    entry.out_shape = pool2d_out_shape(cur, layer.pool);
                    break;
                }
                case LayerKind::dropout: {
                    if (layer.dropout_rate < 0.0 || layer.dropout_rate >= 1.0) {
                        throw_config("dropout rate must lie in [0,1), got " +
                                     std::to_string(layer.dropout_rate));
                    }
                    entry.in_shape = cur;
                    entry.out_shape = cur;
                    break;
                }
                case LayerKind::linear:
                case LayerKind::classifier: {
                    const std::int64_t flat = shape_volume(cur);
                    if (flat != layer.in_features) {
                        throw_config("flattened input length " + std::to_string(flat) +
                                     " does not match in_features " +
                                     std::to_string(layer.in_features));
                    }
                    entry.in_shape = {layer.in_features};
                    entry.out_shape = {layer.out_features};
                    entry.flattened = cur.size() > 1;
                    break;
                }
            }
        } catch (const Error& e) {
            throw Error(e.kind(), "layer " + std::to_string(i) + " (" + layer.name + ", " +
                                      layer_kind_name(layer.kind) + "): " + e.what());
        }
        cur = entry.out_shape;
        io.push_back(std::move(entry));
    }
    if (spec.layers.empty() || spec.layers.back().kind != LayerKind::classifier) {
        throw_config("network must end with a classifier layer");
    }
    if (spec.layers.back().out_features != spec.num_classes) {
        throw_config("classifier width " + std::to_string(spec.layers.back().out_features) +
                     " does not match num_classes " + std::to_string(spec.num_classes));
    }
    return io;
}

std::vector<int> layer_weight_shape(const LayerSpec& layer) {
    switch (layer.kind) {
        case LayerKind::conv3d:
            return {layer.conv3d.out_channels, layer.conv3d.in_channels, layer.conv3d.kernel[0],
                    layer.conv3d.kernel[1], layer.conv3d.kernel[2]};
        case LayerKind::conv2d:
            return {layer.conv2d.out_channels, layer.conv2d.in_channels, layer.conv2d.kernel[0],
                    layer.conv2d.kernel[1]};
        case LayerKind::linear:
        case LayerKind::classifier:
            return {layer.out_features, layer.in_features};
        default:
            return {};
    }
}

std::int64_t parameter_count(const NetworkSpec& spec) {
    std::int64_t n = 0;
    for (const auto& layer : spec.layers) {
        if (layer.has_weights()) n += shape_volume(layer_weight_shape(layer));
    }
    return n;
}

NetworkWeights init_weights(const NetworkSpec& spec, Rng& rng) {
    propagate_shapes(spec);
    NetworkWeights w;
    w.tensors.resize(spec.layers.size());
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& layer = spec.layers[i];
        if (!layer.has_weights()) continue;
        auto shape = layer_weight_shape(layer);
        std::int64_t fan_in = shape_volume(shape) / shape[0];
        // He scaling for the ReLU-activated layers, Xavier-like for the classifier.
        const double stddev = layer.kind == LayerKind::classifier
                                  ? 1.0 / std::sqrt(static_cast<double>(fan_in))
                                  : std::sqrt(2.0 / static_cast<double>(fan_in));
        Tensor t(shape);
        for (std::int64_t k = 0; k < t.size(); ++k) t[k] = rng.normal(0.0, stddev);
        w.tensors[i] = std::move(t);
    }
    return w;
}

NetworkSpec build_cnn3d(int bands, int num_classes) {
    if (bands < 16) {
        throw_config("cnn3d needs at least 16 spectral bands, got " + std::to_string(bands));
    }
    NetworkSpec spec;
    spec.architecture = "cnn3d";
    spec.input = InputDesc{1, bands, 5, 5};
    spec.num_classes = num_classes;

    struct Row {
        int out;
        std::array<int, 3> k, s, p;
    };
    const Row rows[] = {
        {20, {3, 3, 3}, {1, 1, 1}, {0, 0, 0}}, {40, {3, 1, 1}, {2, 1, 1}, {1, 0, 0}},
        {84, {3, 3, 3}, {1, 1, 1}, {1, 0, 0}}, {84, {3, 1, 1}, {2, 1, 1}, {1, 0, 0}},
        {84, {3, 1, 1}, {1, 1, 1}, {1, 0, 0}}, {84, {2, 1, 1}, {2, 1, 1}, {1, 0, 0}},
    };
    int in_ch = 1;
    int idx = 1;
    for (const Row& r : rows) {
        LayerSpec layer;
        layer.kind = LayerKind::conv3d;
        layer.name = "conv" + std::to_string(idx++);
        layer.conv3d = Conv3dGeometry{in_ch, r.out, r.k, r.s, r.p};
        spec.layers.push_back(layer);
        in_ch = r.out;
    }

    // Temporarily append a classifier so propagation can size it.
    LayerSpec cls;
    cls.kind = LayerKind::classifier;
    cls.name = "classifier";
    cls.out_features = num_classes;
    cls.in_features = 1;  // placeholder until propagation below
    {
        NetworkSpec probe = spec;
        std::vector<int> cur = probe.input.shape();
        for (const auto& layer : probe.layers) cur = conv3d_out_shape(cur, layer.conv3d);
        cls.in_features = static_cast<int>(shape_volume(cur));
    }
    spec.layers.push_back(cls);
    propagate_shapes(spec);
    return spec;
}

NetworkSpec build_cnn32h(int bands, int num_classes, int hidden_features) {
    NetworkSpec spec;
    spec.architecture = "cnn32h";
    spec.input = InputDesc{1, bands, 3, 3};
    spec.num_classes = num_classes;

    LayerSpec c3;
    c3.kind = LayerKind::conv3d;
    c3.name = "conv1";
    c3.conv3d = Conv3dGeometry{1, 90, {18, 3, 3}, {7, 1, 1}, {0, 0, 0}};
    std::vector<int> cur;
    try {
        cur = conv3d_out_shape(spec.input.shape(), c3.conv3d);
    } catch (const Error& e) {
        throw Error(e.kind(), std::string("layer 0 (conv1, conv3d): ") + e.what());
    }
    spec.layers.push_back(c3);

    // Fold (channels x spectral) into 2-D channels.
    cur = {cur[0] * cur[1], cur[2], cur[3]};

    const std::array<int, 2> pool_window{4, 4};
    int conv_idx = 2;
    for (int out_ch : {64, 128}) {
        LayerSpec c2;
        c2.kind = LayerKind::conv2d;
        c2.name = "conv" + std::to_string(conv_idx++);
        int pad = 0;
        const int valid = cur[1] - 3 + 1;
        if (valid < pool_window[0]) {
            pad = 1;
            spec.build_notes.push_back(c2.name +
                                       ": inserted padding 1 (spatial extent would drop below the "
                                       "pooling window)");
        }
        c2.conv2d = Conv2dGeometry{cur[0], out_ch, {3, 3}, {1, 1}, {pad, pad}};
        cur = conv2d_out_shape(cur, c2.conv2d);
        spec.layers.push_back(c2);
    }

    LayerSpec pool;
    pool.kind = LayerKind::avgpool2d;
    pool.name = "pool1";
    pool.pool = Pool2dGeometry{pool_window, pool_window};
    if (cur[1] < pool_window[0] || cur[2] < pool_window[1]) {
        pool.pool = Pool2dGeometry{{cur[1], cur[2]}, {cur[1], cur[2]}};
        spec.build_notes.push_back("pool1: window clamped to " + std::to_string(cur[1]) + "x" +
                                   std::to_string(cur[2]) + " (input extent below 4x4)");
    }
    cur = pool2d_out_shape(cur, pool.pool);
    spec.layers.push_back(pool);

    LayerSpec drop;
    drop.kind = LayerKind::dropout;
    drop.name = "drop1";
    drop.dropout_rate = 0.2;
    spec.layers.push_back(drop);

    LayerSpec fc;
    fc.kind = LayerKind::linear;
    fc.name = "fc1";
    fc.in_features = static_cast<int>(shape_volume(cur));
    fc.out_features = hidden_features;
    spec.layers.push_back(fc);

    LayerSpec cls;
    cls.kind = LayerKind::classifier;
    cls.name = "classifier";
    cls.in_features = hidden_features;
    cls.out_features = num_classes;
    spec.layers.push_back(cls);

    propagate_shapes(spec);
    return spec;
}

// ---- JSON serialization ----

static json layer_to_json(const LayerSpec& layer) {
    json j;
    j["name"] = layer.name;
    j["kind"] = layer_kind_name(layer.kind);
    switch (layer.kind) {
        case LayerKind::conv3d:
            j["in_channels"] = layer.conv3d.in_channels;
            j["out_channels"] = layer.conv3d.out_channels;
            j["kernel"] = layer.conv3d.kernel;
            j["stride"] = layer.conv3d.stride;
            j["pad"] = layer.conv3d.pad;
            break;
        case LayerKind::conv2d:
            j["in_channels"] = layer.conv2d.in_channels;
            j["out_channels"] = layer.conv2d.out_channels;
            j["kernel"] = layer.conv2d.kernel;
            j["stride"] = layer.conv2d.stride;
            j["pad"] = layer.conv2d.pad;
            break;
        case LayerKind::avgpool2d:
            j["window"] = layer.pool.window;
            j["stride"] = layer.pool.stride;
            break;
        case LayerKind::dropout:
            j["rate"] = layer.dropout_rate;
            break;
        case LayerKind::linear:
        case LayerKind::classifier:
            j["in_features"] = layer.in_features;
            j["out_features"] = layer.out_features;
            break;
    }
    return j;
}

template <std::size_t N>
static std::array<int, N> int_array(const json& j, const char* key) {
    auto v = j.at(key).get<std::vector<int>>();
    if (v.size() != N) {
        throw_config(std::string("field '") + key + "' must have " + std::to_string(N) +
                     " entries");
    }
    std::array<int, N> out{};
    for (std::size_t i = 0; i < N; ++i) out[i] = v[i];
    return out;
}

static LayerSpec layer_from_json(const json& j) {
    LayerSpec layer;
    layer.name = j.at("name").get<std::string>();
    layer.kind = layer_kind_from_name(j.at("kind").get<std::string>());
    switch (layer.kind) {
        case LayerKind::conv3d:
            layer.conv3d.in_channels = j.at("in_channels").get<int>();
            layer.conv3d.out_channels = j.at("out_channels").get<int>();
            layer.conv3d.kernel = int_array<3>(j, "kernel");
            layer.conv3d.stride = int_array<3>(j, "stride");
            layer.conv3d.pad = int_array<3>(j, "pad");
            break;
        case LayerKind::conv2d:
            layer.conv2d.in_channels = j.at("in_channels").get<int>();
            layer.conv2d.out_channels = j.at("out_channels").get<int>();
            layer.conv2d.kernel = int_array<2>(j, "kernel");
            layer.conv2d.stride = int_array<2>(j, "stride");
            layer.conv2d.pad = int_array<2>(j, "pad");
            break;
        case LayerKind::avgpool2d:
            layer.pool.window = int_array<2>(j, "window");
            layer.pool.stride = int_array<2>(j, "stride");
            break;
        case LayerKind::dropout:
            layer.dropout_rate = j.at("rate").get<double>();
            break;
        case LayerKind::linear:
        case LayerKind::classifier:
            layer.in_features = j.at("in_features").get<int>();
            layer.out_features = j.at("out_features").get<int>();
            break;
    }
    return layer;
}

std::string network_spec_to_json(const NetworkSpec& spec) {
    json j;
    j["architecture"] = spec.architecture;
    j["input"] = {{"channels", spec.input.channels},
                  {"bands", spec.input.bands},
                  {"height", spec.input.height},
                  {"width", spec.input.width}};
    j["num_classes"] = spec.num_classes;
    j["mode"] = network_mode_name(spec.mode);
    j["timesteps"] = spec.timesteps;
    j["layers"] = json::array();
    for (const auto& layer : spec.layers) j["layers"].push_back(layer_to_json(layer));
    j["notes"] = spec.build_notes;
    return j.dump(2);
}

NetworkSpec network_spec_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw_config(std::string("invalid network spec JSON: ") + e.what());
    }
    try {
        NetworkSpec spec;
        spec.architecture = j.at("architecture").get<std::string>();
        const json& in = j.at("input");
        spec.input = InputDesc{in.at("channels").get<int>(), in.at("bands").get<int>(),
                               in.at("height").get<int>(), in.at("width").get<int>()};
        spec.num_classes = j.at("num_classes").get<int>();
        spec.mode = network_mode_from_name(j.at("mode").get<std::string>());
        spec.timesteps = j.at("timesteps").get<int>();
        for (const json& lj : j.at("layers")) spec.layers.push_back(layer_from_json(lj));
        if (j.contains("notes")) spec.build_notes = j.at("notes").get<std::vector<std::string>>();
        propagate_shapes(spec);
        return spec;
    } catch (const json::exception& e) {
        throw_config(std::string("invalid network spec JSON: ") + e.what());
    }
}

// ---- forward execution ----

std::vector<int> spiking_layer_indices(const NetworkSpec& spec) {
    std::vector<int> idx;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        if (spec.layers[i].is_spiking()) idx.push_back(static_cast<int>(i));
    }
    return idx;
}

std::vector<std::string> spiking_layer_names(const NetworkSpec& spec) {
    std::vector<std::string> names;
    for (const auto& layer : spec.layers) {
        if (layer.is_spiking()) names.push_back(layer.name);
    }
    return names;
}

static Tensor adapt_input(const Tensor& cur, const LayerIo& io) {
    if (cur.shape() == io.in_shape) return cur;
    return cur.reshaped(io.in_shape);
}

Tensor ann_forward(const NetworkSpec& spec, const NetworkWeights& weights, const Tensor& patch,
                   bool training, Rng* dropout_rng, AnnTrace* trace) {
    auto io = propagate_shapes(spec);
    if (patch.shape() != spec.input.shape()) {
        throw_config("input patch shape " + shape_to_string(patch.shape()) +
                     " does not match network input " + shape_to_string(spec.input.shape()));
    }
    if (trace) {
        trace->inputs.assign(spec.layers.size(), Tensor());
        trace->preacts.assign(spec.layers.size(), Tensor());
        trace->dropout_masks.assign(spec.layers.size(), Tensor());
        trace->io = io;
    }

    Tensor cur = patch;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& layer = spec.layers[i];
        Tensor x = adapt_input(cur, io[i]);
        if (trace && layer.has_weights()) trace->inputs[i] = x;
        switch (layer.kind) {
            case LayerKind::conv3d:
                cur = conv3d_forward(x, weights.tensors[i], layer.conv3d);
                break;
            case LayerKind::conv2d:
                cur = conv2d_forward(x, weights.tensors[i], layer.conv2d);
                break;
            case LayerKind::avgpool2d:
                cur = avgpool2d_forward(x, layer.pool);
                break;
            case LayerKind::dropout: {
                if (training && !dropout_rng) {
                    throw_config("dropout in training mode needs an RNG");
                }
                Tensor mask;
                Rng dummy(0);
                cur = dropout_apply(x, layer.dropout_rate, training ? *dropout_rng : dummy,
                                    training, trace ? &mask : nullptr);
                if (trace) trace->dropout_masks[i] = std::move(mask);
                break;
            }
            case LayerKind::linear:
            case LayerKind::classifier:
                cur = linear_forward(x, weights.tensors[i]);
                break;
        }
        if (trace && layer.has_weights()) trace->preacts[i] = cur;
        if (layer.is_spiking()) {
            for (std::int64_t k = 0; k < cur.size(); ++k) cur[k] = cur[k] > 0.0 ? cur[k] : 0.0;
        }
    }
    return cur;
}

SnnForwardOut snn_forward(const NetworkSpec& spec, const NetworkWeights& weights,
                          const std::vector<LifParams>& lif, const Tensor& patch,
                          const SnnOptions& opts) {
    auto io = propagate_shapes(spec);
    if (patch.shape() != spec.input.shape()) {
        throw_config("input patch shape " + shape_to_string(patch.shape()) +
                     " does not match network input " + shape_to_string(spec.input.shape()));
    }
    auto spiking = spiking_layer_indices(spec);
    if (lif.size() != spiking.size()) {
        throw_config("expected " + std::to_string(spiking.size()) + " LIF parameter entries, got " +
                     std::to_string(lif.size()));
    }

    const int T = opts.timesteps;
    Tensor encoded = direct_encode(patch, T, opts.input_quant);

    // Spiking-layer index for each network layer, -1 otherwise.
    std::vector<int> spike_slot(spec.layers.size(), -1);
    for (std::size_t s = 0; s < spiking.size(); ++s) {
        spike_slot[static_cast<std::size_t>(spiking[s])] = static_cast<int>(s);
    }

    std::vector<LifLayerState> states;
    states.reserve(spiking.size());
    for (int layer_idx : spiking) {
        states.emplace_back(io[static_cast<std::size_t>(layer_idx)].out_shape);
    }

    // Dropout masks are fixed per forward pass: every timestep sees the same
    // subnetwork.
    std::vector<Tensor> masks(spec.layers.size());
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        if (spec.layers[i].kind != LayerKind::dropout) continue;
        if (opts.training) {
            if (!opts.dropout_rng) throw_config("dropout in training mode needs an RNG");
            Tensor ones(io[i].in_shape, 1.0);
            dropout_apply(ones, spec.layers[i].dropout_rate, *opts.dropout_rng, true, &masks[i]);
        } else {
            masks[i] = Tensor(io[i].in_shape, 1.0);
        }
    }

    SnnForwardOut out;
    out.potentials = Tensor({spec.num_classes});
    if (opts.record_spikes || opts.record_trace) {
        out.record.layer_names = spiking_layer_names(spec);
        out.record.spikes.resize(spiking.size());
        out.record.timesteps = T;
    }
    if (opts.record_trace) {
        out.trace.encoded = encoded;
        out.trace.spiking.resize(spiking.size());
        out.trace.dropout_masks = masks;
        out.trace.io = io;
    }

    LifStepOptions step_opts;
    step_opts.potential_bits = opts.potential_bits;

    for (int t = 0; t < T; ++t) {
        Tensor cur = encoded;
        for (std::size_t i = 0; i < spec.layers.size(); ++i) {
            const LayerSpec& layer = spec.layers[i];
            Tensor x = adapt_input(cur, io[i]);
            switch (layer.kind) {
                case LayerKind::conv3d:
                case LayerKind::conv2d:
                case LayerKind::linear: {
                    Tensor drive;
                    if (layer.kind == LayerKind::conv3d) {
                        drive = conv3d_forward(x, weights.tensors[i], layer.conv3d);
                    } else if (layer.kind == LayerKind::conv2d) {
                        drive = conv2d_forward(x, weights.tensors[i], layer.conv2d);
                    } else {
                        drive = linear_forward(x, weights.tensors[i]);
                    }
                    const int slot = spike_slot[i];
                    auto& state = states[static_cast<std::size_t>(slot)];
                    auto step = lif_step(state, drive, lif[static_cast<std::size_t>(slot)],
                                         step_opts);
                    if (opts.record_trace) {
                        auto& lt = out.trace.spiking[static_cast<std::size_t>(slot)];
                        lt.input.push_back(x);
                        lt.u.push_back(state.u);
                        lt.z.push_back(step.z);
                        lt.o.push_back(step.spikes);
                    }
                    if (opts.record_spikes || opts.record_trace) {
                        out.record.spikes[static_cast<std::size_t>(slot)].push_back(step.spikes);
                    }
                    cur = std::move(step.spikes);
                    break;
                }
                case LayerKind::avgpool2d:
                    cur = avgpool2d_forward(x, layer.pool);
                    break;
                case LayerKind::dropout: {
                    Tensor dropped(x.shape());
                    for (std::int64_t k = 0; k < x.size(); ++k) dropped[k] = x[k] * masks[i][k];
                    cur = std::move(dropped);
                    break;
                }
                case LayerKind::classifier: {
                    if (opts.record_trace) out.trace.classifier_inputs.push_back(x);
                    Tensor drive = linear_forward(x, weights.tensors[i]);
                    output_accumulate(out.potentials, drive);
                    cur = out.potentials;
                    break;
                }
            }
        }
    }
    return out;
}

}  // namespace hsnn
