#pragma once

#include "hsnn/quant.hpp"
#include "hsnn/tensor.hpp"

namespace hsnn {

// One leak/threshold pair per layer; all neurons in the layer share it.
struct LifParams {
    double leak = 1.0;       // lambda, in (0,1] at initialization
    double threshold = 1.0;  // v, must stay positive
};

constexpr double kMinThreshold = 1e-6;

struct LifLayerState {
    Tensor u;       // membrane potentials
    Tensor o_prev;  // previous-step output spikes, entries in {0,1}

    explicit LifLayerState(const std::vector<int>& shape) : u(shape), o_prev(shape) {}
};

struct LifStepOut {
    Tensor spikes;  // binary
    Tensor z;       // u/v - 1, kept for the surrogate-gradient path
};

struct LifStepOptions {
    // When positive, membrane potentials are fake-quantized (scale scheme,
    // range from the current potentials) to this many bits after the update
    // and before the threshold comparison.
    int potential_bits = 0;
};

// u <- leak*u + drive - v*o_prev (soft reset), z = u/v - 1, spike iff z > 0
// (strict). The state is advanced in place.
LifStepOut lif_step(LifLayerState& state, const Tensor& weighted_input, const LifParams& params,
                    const LifStepOptions& opts = {});

// LIF with leak pinned to 1.
LifStepOut if_step(LifLayerState& state, const Tensor& weighted_input, double threshold,
                   const LifStepOptions& opts = {});

// Output layer: accumulate only, no leak, no spikes, no reset.
void output_accumulate(Tensor& potentials, const Tensor& weighted_input);

// Direct input encoding: the same analog tensor is presented at every step.
// When params is non-null the tensor is fake-quantized once up front.
Tensor direct_encode(const Tensor& patch, int timesteps, const QuantParams* params = nullptr);

}  // namespace hsnn
