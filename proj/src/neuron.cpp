#include "hsnn/neuron.hpp"

#include "hsnn/error.hpp"

namespace hsnn {

LifStepOut lif_step(LifLayerState& state, const Tensor& weighted_input, const LifParams& params,
                    const LifStepOptions& opts) {
    if (params.threshold <= 0.0) {
        throw_config("LIF threshold must be positive, got " + std::to_string(params.threshold));
    }
    if (!state.u.same_shape(weighted_input)) {
        throw_config("LIF drive shape " + shape_to_string(weighted_input.shape()) +
                     " does not match state shape " + shape_to_string(state.u.shape()));
    }

    const std::int64_t n = state.u.size();
    for (std::int64_t i = 0; i < n; ++i) {
        state.u[i] = params.leak * state.u[i] + weighted_input[i] -
                     params.threshold * state.o_prev[i];
    }
    if (opts.potential_bits > 0) {
        state.u = fake_quantize(
            state.u, calibrate_params(state.u, opts.potential_bits, QuantScheme::scale));
    }

    LifStepOut out{Tensor(state.u.shape()), Tensor(state.u.shape())};
    for (std::int64_t i = 0; i < n; ++i) {
        const double z = state.u[i] / params.threshold - 1.0;
        out.z[i] = z;
        out.spikes[i] = z > 0.0 ? 1.0 : 0.0;
    }
    state.o_prev = out.spikes;
    return out;
}

LifStepOut if_step(LifLayerState& state, const Tensor& weighted_input, double threshold,
                   const LifStepOptions& opts) {
    return lif_step(state, weighted_input, LifParams{1.0, threshold}, opts);
}

void output_accumulate(Tensor& potentials, const Tensor& weighted_input) {
    if (!potentials.same_shape(weighted_input)) {
        throw_config("output drive shape " + shape_to_string(weighted_input.shape()) +
                     " does not match potential shape " + shape_to_string(potentials.shape()));
    }
    for (std::int64_t i = 0; i < potentials.size(); ++i) potentials[i] += weighted_input[i];
}

Tensor direct_encode(const Tensor& patch, int timesteps, const QuantParams* params) {
    if (timesteps < 1) {
        throw_config("direct encoding needs at least one timestep, got " +
                     std::to_string(timesteps));
    }
    return params ? fake_quantize(patch, *params) : patch;
}

}  // namespace hsnn
