#pragma once

#include <optional>

#include "hsnn/checkpoint.hpp"
#include "hsnn/data.hpp"
#include "hsnn/metrics.hpp"
#include "hsnn/network.hpp"

namespace hsnn {

struct LossAndGrad {
    double loss = 0.0;
    Tensor grad;  // softmax(u) - one_hot(label)
};

// Cross-entropy on the softmax of the final potentials (max-subtracted).
LossAndGrad loss_and_output_grad(const Tensor& potentials, int label);

// Triangular surrogate gamma * max(0, 1 - |z|).
Tensor surrogate_grad(const Tensor& z, double gamma);
double surrogate_grad(double z, double gamma);

// Output-layer weight gradient: outer product of the loss gradient with the
// timestep-summed presynaptic spikes (straight-through factor applied).
Tensor output_weight_grad(const Tensor& loss_grad, const std::vector<Tensor>& presyn_spikes);

struct ParamGrads {
    std::vector<Tensor> weights;     // aligned to spec.layers; grads w.r.t. the forward weights
    std::vector<double> threshold;   // per spiking layer
    std::vector<double> leak;        // per spiking layer

    void accumulate(const ParamGrads& other);
    void scale(double factor);
};

// Reverse-time sweep over a recorded forward: surrogate at each spike
// nonlinearity, 1/v from the normalized potential, temporal carry through the
// leak and the soft-reset term. Returns gradients for weights, thresholds,
// and leaks of every layer.
ParamGrads qstdb_backward(const NetworkSpec& spec, const NetworkWeights& forward_weights,
                          const std::vector<LifParams>& lif, const SnnTrace& trace,
                          const Tensor& loss_grad, double gamma);

// Plain backprop through the ReLU network using a recorded ANN forward.
std::vector<Tensor> ann_backward(const NetworkSpec& spec, const NetworkWeights& weights,
                                 const AnnTrace& trace, const Tensor& loss_grad);

struct LrSchedule {
    double initial = 0.01;
    double decay = 0.1;
    std::vector<int> decay_epochs{60, 80, 90};

    double rate_for_epoch(int epoch) const;  // epoch is 1-based
};

class SgdOptimizer {
public:
    SgdOptimizer(double momentum = 0.0, double weight_decay = 0.0)
        : momentum_(momentum), weight_decay_(weight_decay) {}
    void step(const std::vector<double*>& params, const std::vector<double>& grads, double lr);

private:
    double momentum_;
    double weight_decay_;
    std::vector<double> velocity_;
};

class AdamOptimizer {
public:
    AdamOptimizer(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : beta1_(beta1), beta2_(beta2), eps_(eps) {}
    void step(const std::vector<double*>& params, const std::vector<double>& grads, double lr);

private:
    double beta1_, beta2_, eps_;
    long steps_ = 0;
    std::vector<double> m_, v_;
};

struct EpochLog {
    int epoch = 0;
    double lr = 0.0;
    double loss = 0.0;
    double train_oa = 0.0;
    double test_oa = 0.0;
    double wall_ms = 0.0;
};

struct AnnTrainConfig {
    int epochs = 100;
    LrSchedule schedule{0.01, 0.1, {60, 80, 90}};
    int batch_size = 50;
    double momentum = 0.0;
    double weight_decay = 0.0;
    std::uint64_t seed = 1;
};

struct SnnTrainConfig {
    int epochs = 100;
    LrSchedule schedule{1e-4, 0.5, {60, 80, 90}};
    int batch_size = 50;
    int bits = 6;            // 0 disables weight/input fake quantization
    int timesteps = 5;
    double gamma = 0.3;
    int potential_bits = 6;  // 0 disables membrane quantization
    std::uint64_t seed = 1;
};

struct TrainResult {
    Checkpoint best;
    std::vector<EpochLog> log;
    int best_epoch = 0;
    double best_test_oa = 0.0;
};

TrainResult train_ann(const NetworkSpec& spec, const PatchDataset& train_set,
                      const PatchDataset& test_set, const AnnTrainConfig& cfg);

// Quantization-aware SNN training starting from a converted checkpoint
// (weights, unity leaks, calibrated thresholds). Weight ranges are refreshed
// every mini-batch; master weights stay full precision.
TrainResult train_snn(const Checkpoint& init, const PatchDataset& train_set,
                      const PatchDataset& test_set, const SnnTrainConfig& cfg);

struct EvalOptions {
    int timesteps = 5;            // snn mode
    int potential_bits = 0;       // snn mode
    int weight_bits = 0;          // 0: use weights as stored / unquantized
    QuantScheme weight_scheme = QuantScheme::affine;
    // When set, stored per-layer params are used instead of fresh calibration.
    const std::vector<std::optional<QuantParams>>* stored_weight_quant = nullptr;
    int input_bits = 0;           // snn mode; per-sample calibration when > 0
    QuantScheme input_scheme = QuantScheme::affine;
    const QuantParams* fixed_input_quant = nullptr;
    bool quantize_output_potentials = false;
};

struct EvalOutput {
    Metrics metrics;
    std::vector<int> predictions;  // 0-based class index per sample
};

EvalOutput evaluate_ann(const NetworkSpec& spec, const NetworkWeights& weights,
                        const PatchDataset& set);
EvalOutput evaluate_snn(const NetworkSpec& spec, const NetworkWeights& weights,
                        const std::vector<LifParams>& lif, const PatchDataset& set,
                        const EvalOptions& opts);

// Prepares forward weights under the given eval options (identity when no
// quantization applies).
NetworkWeights prepare_forward_weights(const NetworkSpec& spec, const NetworkWeights& master,
                                       const EvalOptions& opts);

int argmax(const Tensor& t);

}  // namespace hsnn
