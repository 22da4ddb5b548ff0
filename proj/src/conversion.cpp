#include "hsnn/conversion.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "hsnn/error.hpp"

namespace hsnn {

Checkpoint init_snn_from_ann(const Checkpoint& ann, int timesteps) {
    if (ann.spec.mode != NetworkMode::ann) {
        throw_config("conversion expects an ANN checkpoint, got mode " +
                     std::string(network_mode_name(ann.spec.mode)));
    }
    Checkpoint snn(ann.spec);
    snn.spec.mode = NetworkMode::snn;
    snn.spec.timesteps = timesteps;
    for (std::size_t i = 0; i < ann.weights.tensors.size(); ++i) {
        const Tensor& w = ann.weights.tensors[i];
        if (snn.spec.layers[i].has_weights() && w.empty()) {
            throw_config("ANN checkpoint is missing weights for layer " + snn.spec.layers[i].name);
        }
        snn.weights.tensors[i] = w;
    }
    snn.leak.assign(spiking_layer_indices(snn.spec).size(), 1.0);
    snn.thresholds.reset();
    return snn;
}

double percentile_interpolated(std::vector<double> values, double pct) {
    if (values.empty()) throw_input("percentile of an empty sample");
    if (pct <= 0.0 || pct > 100.0) {
        throw_config("percentile must lie in (0,100], got " + std::to_string(pct));
    }
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * pct / 100.0;
    const std::size_t i0 = static_cast<std::size_t>(std::floor(h));
    const double frac = h - std::floor(h);
    if (i0 + 1 >= values.size()) return values.back();
    return values[i0] + frac * (values[i0 + 1] - values[i0]);
}

namespace {

// Keeps the m largest values seen; enough to evaluate a high percentile of
// the full stream without holding it in memory.
class TopValues {
public:
    explicit TopValues(std::size_t capacity) : capacity_(std::max<std::size_t>(capacity, 2)) {}

    void push(double v) {
        if (heap_.size() < capacity_) {
            heap_.push(v);
        } else if (v > heap_.top()) {
            heap_.pop();
            heap_.push(v);
        }
    }

    // Ascending tail of the stream (ranks n-m .. n-1).
    std::vector<double> sorted_tail() {
        std::vector<double> out;
        out.reserve(heap_.size());
        while (!heap_.empty()) {
            out.push_back(heap_.top());
            heap_.pop();
        }
        return out;  // min-heap pops ascending
    }

private:
    std::size_t capacity_;
    std::priority_queue<double, std::vector<double>, std::greater<double>> heap_;
};

}  // namespace

CalibrationReport calibrate_thresholds(Checkpoint& snn, const PatchDataset& batch,
                                       const CalibrationConfig& cfg) {
    if (batch.samples.empty()) throw_input("threshold calibration needs a non-empty batch");
    if (cfg.percentile <= 0.0 || cfg.percentile > 100.0) {
        throw_config("calibration percentile must lie in (0,100]");
    }
    if (cfg.threshold_scale <= 0.0) throw_config("threshold scale must be positive");
    if (cfg.timesteps < 1) throw_config("calibration needs at least one timestep");
    if (snn.spec.mode != NetworkMode::snn) throw_config("calibration expects an SNN checkpoint");

    const NetworkSpec& spec = snn.spec;
    const auto io = propagate_shapes(spec);
    const auto spiking = spiking_layer_indices(spec);
    const int T = cfg.timesteps;
    const std::size_t n_samples =
        std::min<std::size_t>(batch.samples.size(), static_cast<std::size_t>(cfg.batch_size));

    std::vector<double> thresholds(spiking.size(), 0.0);
    CalibrationReport report;

    for (std::size_t k = 0; k < spiking.size(); ++k) {
        const int target_layer = spiking[k];
        const std::int64_t neurons =
            shape_volume(io[static_cast<std::size_t>(target_layer)].out_shape);
        const std::int64_t total = neurons * T * static_cast<std::int64_t>(n_samples);

        const double h = (static_cast<double>(total) - 1.0) * cfg.percentile / 100.0;
        const std::int64_t rank0 = static_cast<std::int64_t>(std::floor(h));
        TopValues top(static_cast<std::size_t>(total - rank0) + 1);

        for (std::size_t s = 0; s < n_samples; ++s) {
            const Tensor& patch = batch.samples[s].patch;
            std::vector<LifLayerState> states;
            for (std::size_t j = 0; j < k; ++j) {
                states.emplace_back(io[static_cast<std::size_t>(spiking[j])].out_shape);
            }
            for (int t = 0; t < T; ++t) {
                Tensor cur = patch;
                std::size_t spike_idx = 0;
                for (int li = 0; li <= target_layer; ++li) {
                    const LayerSpec& layer = spec.layers[static_cast<std::size_t>(li)];
                    const LayerIo& lio = io[static_cast<std::size_t>(li)];
                    Tensor x = cur.shape() == lio.in_shape ? cur : cur.reshaped(lio.in_shape);
                    switch (layer.kind) {
                        case LayerKind::conv3d:
                        case LayerKind::conv2d:
                        case LayerKind::linear: {
                            Tensor drive;
                            if (layer.kind == LayerKind::conv3d) {
                                drive = conv3d_forward(
                                    x, snn.weights.tensors[static_cast<std::size_t>(li)],
                                    layer.conv3d);
                            } else if (layer.kind == LayerKind::conv2d) {
                                drive = conv2d_forward(
                                    x, snn.weights.tensors[static_cast<std::size_t>(li)],
                                    layer.conv2d);
                            } else {
                                drive = linear_forward(
                                    x, snn.weights.tensors[static_cast<std::size_t>(li)]);
                            }
                            if (li == target_layer) {
                                for (std::int64_t n = 0; n < drive.size(); ++n) top.push(drive[n]);
                            } else {
                                // leak pinned to unity while evaluating thresholds
                                auto step = lif_step(states[spike_idx], drive,
                                                     LifParams{1.0, thresholds[spike_idx]});
                                cur = std::move(step.spikes);
                            }
                            ++spike_idx;
                            break;
                        }
                        case LayerKind::avgpool2d:
                            cur = avgpool2d_forward(x, layer.pool);
                            break;
                        case LayerKind::dropout:
                            cur = x;  // calibration runs in eval mode
                            break;
                        case LayerKind::classifier:
                            cur = x;
                            break;
                    }
                    if (li == target_layer) break;
                }
            }
        }

        auto tail = top.sorted_tail();
        // tail holds ranks rank0-1 .. total-1 (one extra below the percentile
        // index so interpolation has both neighbours even when frac is 0).
        const double frac = h - std::floor(h);
        const std::size_t offset = static_cast<std::size_t>(rank0 - (total - static_cast<std::int64_t>(tail.size())));
        double pct_value;
        if (offset + 1 < tail.size()) {
            pct_value = tail[offset] + frac * (tail[offset + 1] - tail[offset]);
        } else {
            pct_value = tail.back();
        }

        LayerCalibration entry;
        entry.layer = spec.layers[static_cast<std::size_t>(target_layer)].name;
        entry.samples_seen = total;
        entry.percentile_value = pct_value;
        double v = pct_value * cfg.threshold_scale;
        if (v <= 0.0) {
            v = kMinThreshold;
            entry.clamped = true;
            report.warnings.push_back("layer " + entry.layer +
                                      ": non-positive calibrated threshold clamped to epsilon");
        }
        entry.threshold = v;
        thresholds[k] = v;
        report.layers.push_back(entry);
    }

    snn.thresholds = thresholds;
    snn.leak.assign(spiking.size(), 1.0);
    return report;
}

}  // namespace hsnn
