#pragma once

#include "hsnn/checkpoint.hpp"
#include "hsnn/data.hpp"

namespace hsnn {

struct CalibrationConfig {
    int batch_size = 50;
    int timesteps = 100;      // steps used to collect drive statistics
    double percentile = 99.7;  // in (0, 100]
    double threshold_scale = 0.8;
};

struct LayerCalibration {
    std::string layer;
    std::int64_t samples_seen = 0;  // per-step per-neuron drive values examined
    double percentile_value = 0.0;
    double threshold = 0.0;
    bool clamped = false;
};

struct CalibrationReport {
    std::vector<LayerCalibration> layers;
    std::vector<std::string> warnings;
};

// Copies the ANN weights verbatim into an iso-architecture SNN checkpoint;
// leaks start at 1.0 and thresholds stay unset pending calibration.
Checkpoint init_snn_from_ann(const Checkpoint& ann, int timesteps);

// Layer by layer, in network order: run the partially calibrated network for
// cfg.timesteps over the batch, collect every neuron's per-step weighted
// input at the current layer, take the configured percentile (linear
// interpolation on the sorted sample), scale it, and fix it as the layer
// threshold. Leak stays at unity throughout.
CalibrationReport calibrate_thresholds(Checkpoint& snn, const PatchDataset& batch,
                                       const CalibrationConfig& cfg);

// Percentile by linear interpolation on the sorted sample.
double percentile_interpolated(std::vector<double> values, double pct);

}  // namespace hsnn
