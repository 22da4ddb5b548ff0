#include "hsnn/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "hsnn/error.hpp"

namespace hsnn {

int argmax(const Tensor& t) {
    int best = 0;
    for (std::int64_t i = 1; i < t.size(); ++i) {
        if (t[i] > t[best]) best = static_cast<int>(i);
    }
    return best;
}

LossAndGrad loss_and_output_grad(const Tensor& potentials, int label) {
    const std::int64_t n = potentials.size();
    if (label < 0 || label >= n) {
        throw_input("label " + std::to_string(label) + " out of range for " + std::to_string(n) +
                    " classes");
    }
    double max_u = potentials[0];
    for (std::int64_t i = 1; i < n; ++i) max_u = std::max(max_u, potentials[i]);
    double denom = 0.0;
    for (std::int64_t i = 0; i < n; ++i) denom += std::exp(potentials[i] - max_u);

    LossAndGrad out;
    out.grad = Tensor(potentials.shape());
    for (std::int64_t i = 0; i < n; ++i) {
        const double p = std::exp(potentials[i] - max_u) / denom;
        out.grad[i] = p - (i == label ? 1.0 : 0.0);
        if (i == label) out.loss = -std::log(p);
    }
    return out;
}

double surrogate_grad(double z, double gamma) {
    const double w = 1.0 - std::abs(z);
    return w > 0.0 ? gamma * w : 0.0;
}

Tensor surrogate_grad(const Tensor& z, double gamma) {
    if (gamma <= 0.0) throw_config("surrogate gamma must be positive");
    Tensor out(z.shape());
    for (std::int64_t i = 0; i < z.size(); ++i) out[i] = surrogate_grad(z[i], gamma);
    return out;
}

Tensor output_weight_grad(const Tensor& loss_grad, const std::vector<Tensor>& presyn_spikes) {
    if (presyn_spikes.empty()) throw_internal("empty presynaptic spike record");
    Tensor summed(presyn_spikes[0].shape());
    for (const Tensor& o : presyn_spikes) {
        if (!o.same_shape(summed)) throw_internal("presynaptic spike record shapes differ");
        for (std::int64_t i = 0; i < o.size(); ++i) summed[i] += o[i];
    }
    const std::int64_t n_out = loss_grad.size();
    const std::int64_t n_in = summed.size();
    Tensor grad({static_cast<int>(n_out), static_cast<int>(n_in)});
    for (std::int64_t o = 0; o < n_out; ++o) {
        for (std::int64_t i = 0; i < n_in; ++i) grad[o * n_in + i] = loss_grad[o] * summed[i];
    }
    return grad;
}

void ParamGrads::accumulate(const ParamGrads& other) {
    if (weights.size() != other.weights.size()) throw_internal("gradient layouts differ");
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i].empty()) continue;
        for (std::int64_t k = 0; k < weights[i].size(); ++k) weights[i][k] += other.weights[i][k];
    }
    for (std::size_t i = 0; i < threshold.size(); ++i) threshold[i] += other.threshold[i];
    for (std::size_t i = 0; i < leak.size(); ++i) leak[i] += other.leak[i];
}

void ParamGrads::scale(double factor) {
    for (auto& t : weights) {
        for (std::int64_t k = 0; k < t.size(); ++k) t[k] *= factor;
    }
    for (auto& v : threshold) v *= factor;
    for (auto& v : leak) v *= factor;
}

ParamGrads qstdb_backward(const NetworkSpec& spec, const NetworkWeights& forward_weights,
                          const std::vector<LifParams>& lif, const SnnTrace& trace,
                          const Tensor& loss_grad, double gamma) {
    const auto& io = trace.io;
    if (io.size() != spec.layers.size()) throw_internal("trace does not match the network spec");
    const int T = static_cast<int>(trace.classifier_inputs.size());
    if (T < 1) throw_internal("forward trace is missing classifier records");

    ParamGrads grads;
    grads.weights.resize(spec.layers.size());
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        if (spec.layers[i].has_weights()) {
            grads.weights[i] = Tensor(layer_weight_shape(spec.layers[i]));
        }
    }
    const auto spiking = spiking_layer_indices(spec);
    grads.threshold.assign(spiking.size(), 0.0);
    grads.leak.assign(spiking.size(), 0.0);
    std::vector<int> spike_slot(spec.layers.size(), -1);
    for (std::size_t s = 0; s < spiking.size(); ++s) {
        spike_slot[static_cast<std::size_t>(spiking[s])] = static_cast<int>(s);
    }

    // Per-step gradients w.r.t. the output of the layer currently below the
    // sweep position.
    std::vector<Tensor> g(static_cast<std::size_t>(T));

    for (int li = static_cast<int>(spec.layers.size()) - 1; li >= 0; --li) {
        const LayerSpec& layer = spec.layers[static_cast<std::size_t>(li)];
        const LayerIo& lio = io[static_cast<std::size_t>(li)];
        switch (layer.kind) {
            case LayerKind::classifier: {
                for (int t = 0; t < T; ++t) {
                    auto kg = linear_backward(loss_grad,
                                              trace.classifier_inputs[static_cast<std::size_t>(t)],
                                              forward_weights.tensors[static_cast<std::size_t>(li)]);
                    for (std::int64_t k = 0; k < kg.weight_grad.size(); ++k) {
                        grads.weights[static_cast<std::size_t>(li)][k] += kg.weight_grad[k];
                    }
                    g[static_cast<std::size_t>(t)] = std::move(kg.input_grad);
                }
                break;
            }
            case LayerKind::dropout: {
                const Tensor& mask = trace.dropout_masks[static_cast<std::size_t>(li)];
                for (int t = 0; t < T; ++t) {
                    Tensor& gt = g[static_cast<std::size_t>(t)];
                    gt = gt.reshaped(lio.in_shape);
                    for (std::int64_t k = 0; k < gt.size(); ++k) gt[k] *= mask[k];
                }
                break;
            }
            case LayerKind::avgpool2d: {
                for (int t = 0; t < T; ++t) {
                    Tensor& gt = g[static_cast<std::size_t>(t)];
                    gt = avgpool2d_backward(gt.reshaped(lio.out_shape), lio.in_shape, layer.pool);
                }
                break;
            }
            case LayerKind::conv3d:
            case LayerKind::conv2d:
            case LayerKind::linear: {
                const int slot = spike_slot[static_cast<std::size_t>(li)];
                const auto& lt = trace.spiking[static_cast<std::size_t>(slot)];
                const LifParams& p = lif[static_cast<std::size_t>(slot)];
                const Tensor& w = forward_weights.tensors[static_cast<std::size_t>(li)];
                Tensor g_u_next;
                std::vector<Tensor> g_lower(static_cast<std::size_t>(T));
                for (int t = T - 1; t >= 0; --t) {
                    Tensor go = g[static_cast<std::size_t>(t)].reshaped(lio.out_shape);
                    if (t < T - 1) {
                        // reset path: u[t+1] depends on o[t] with factor -v
                        for (std::int64_t k = 0; k < go.size(); ++k) {
                            go[k] += -p.threshold * g_u_next[k];
                        }
                    }
                    const Tensor& z = lt.z[static_cast<std::size_t>(t)];
                    const Tensor& u = lt.u[static_cast<std::size_t>(t)];
                    Tensor gu(lio.out_shape);
                    double dv = 0.0, dleak = 0.0;
                    const double inv_v = 1.0 / p.threshold;
                    for (std::int64_t k = 0; k < go.size(); ++k) {
                        const double gz = go[k] * surrogate_grad(z[k], gamma);
                        gu[k] = gz * inv_v;
                        dv += gz * (-u[k] * inv_v * inv_v);
                    }
                    if (t < T - 1) {
                        const Tensor& o = lt.o[static_cast<std::size_t>(t)];
                        for (std::int64_t k = 0; k < gu.size(); ++k) {
                            dv += g_u_next[k] * (-o[k]);
                            gu[k] += p.leak * g_u_next[k];
                        }
                    }
                    if (t >= 1) {
                        const Tensor& u_prev = lt.u[static_cast<std::size_t>(t - 1)];
                        for (std::int64_t k = 0; k < gu.size(); ++k) dleak += gu[k] * u_prev[k];
                    }
                    grads.threshold[static_cast<std::size_t>(slot)] += dv;
                    grads.leak[static_cast<std::size_t>(slot)] += dleak;

                    const Tensor& input = lt.input[static_cast<std::size_t>(t)];
                    KernelGrads kg;
                    if (layer.kind == LayerKind::conv3d) {
                        kg = conv3d_backward(gu, input, w, layer.conv3d);
                    } else if (layer.kind == LayerKind::conv2d) {
                        kg = conv2d_backward(gu, input, w, layer.conv2d);
                    } else {
                        kg = linear_backward(gu, input, w);
                    }
                    for (std::int64_t k = 0; k < kg.weight_grad.size(); ++k) {
                        grads.weights[static_cast<std::size_t>(li)][k] += kg.weight_grad[k];
                    }
                    g_lower[static_cast<std::size_t>(t)] = std::move(kg.input_grad);
                    g_u_next = std::move(gu);
                }
                g = std::move(g_lower);
                break;
            }
        }
    }
    return grads;
}

std::vector<Tensor> ann_backward(const NetworkSpec& spec, const NetworkWeights& weights,
                                 const AnnTrace& trace, const Tensor& loss_grad) {
    std::vector<Tensor> wgrads(spec.layers.size());
    Tensor g = loss_grad;
    for (int li = static_cast<int>(spec.layers.size()) - 1; li >= 0; --li) {
        const LayerSpec& layer = spec.layers[static_cast<std::size_t>(li)];
        const LayerIo& lio = trace.io[static_cast<std::size_t>(li)];
        if (layer.is_spiking()) {
            // ReLU mask on the layer's pre-activation
            const Tensor& pre = trace.preacts[static_cast<std::size_t>(li)];
            g = g.reshaped(lio.out_shape);
            for (std::int64_t k = 0; k < g.size(); ++k) {
                if (pre[k] <= 0.0) g[k] = 0.0;
            }
        }
        switch (layer.kind) {
            case LayerKind::conv3d: {
                auto kg = conv3d_backward(g, trace.inputs[static_cast<std::size_t>(li)],
                                          weights.tensors[static_cast<std::size_t>(li)],
                                          layer.conv3d);
                wgrads[static_cast<std::size_t>(li)] = std::move(kg.weight_grad);
                g = std::move(kg.input_grad);
                break;
            }
            case LayerKind::conv2d: {
                auto kg = conv2d_backward(g, trace.inputs[static_cast<std::size_t>(li)],
                                          weights.tensors[static_cast<std::size_t>(li)],
                                          layer.conv2d);
                wgrads[static_cast<std::size_t>(li)] = std::move(kg.weight_grad);
                g = std::move(kg.input_grad);
                break;
            }
            case LayerKind::linear:
            case LayerKind::classifier: {
                auto kg = linear_backward(g.reshaped(lio.out_shape),
                                          trace.inputs[static_cast<std::size_t>(li)],
                                          weights.tensors[static_cast<std::size_t>(li)]);
                wgrads[static_cast<std::size_t>(li)] = std::move(kg.weight_grad);
                g = std::move(kg.input_grad);
                break;
            }
            case LayerKind::avgpool2d:
                g = avgpool2d_backward(g.reshaped(lio.out_shape), lio.in_shape, layer.pool);
                break;
            case LayerKind::dropout: {
                const Tensor& mask = trace.dropout_masks[static_cast<std::size_t>(li)];
                g = g.reshaped(lio.in_shape);
                for (std::int64_t k = 0; k < g.size(); ++k) g[k] *= mask[k];
                break;
            }
        }
    }
    return wgrads;
}

double LrSchedule::rate_for_epoch(int epoch) const {
    double lr = initial;
    for (int d : decay_epochs) {
        if (epoch > d) lr *= decay;
    }
    return lr;
}

void SgdOptimizer::step(const std::vector<double*>& params, const std::vector<double>& grads,
                        double lr) {
    if (params.size() != grads.size()) throw_internal("optimizer parameter/gradient mismatch");
    if (momentum_ != 0.0 && velocity_.size() != params.size()) {
        velocity_.assign(params.size(), 0.0);
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        double grad = grads[i] + weight_decay_ * (*params[i]);
        if (momentum_ != 0.0) {
            velocity_[i] = momentum_ * velocity_[i] + grad;
            grad = velocity_[i];
        }
        *params[i] -= lr * grad;
    }
}

void AdamOptimizer::step(const std::vector<double*>& params, const std::vector<double>& grads,
                         double lr) {
    if (params.size() != grads.size()) throw_internal("optimizer parameter/gradient mismatch");
    if (m_.size() != params.size()) {
        m_.assign(params.size(), 0.0);
        v_.assign(params.size(), 0.0);
        steps_ = 0;
    }
    ++steps_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grads[i] * grads[i];
        const double mhat = m_[i] / bc1;
        const double vhat = v_[i] / bc2;
        *params[i] -= lr * mhat / (std::sqrt(vhat) + eps_);
    }
}

// ---- evaluation ----

NetworkWeights prepare_forward_weights(const NetworkSpec&, const NetworkWeights& master,
                                       const EvalOptions& opts) {
    NetworkWeights fw;
    fw.tensors.resize(master.tensors.size());
    for (std::size_t i = 0; i < master.tensors.size(); ++i) {
        const Tensor& w = master.tensors[i];
        if (w.empty()) continue;
        if (opts.stored_weight_quant && (*opts.stored_weight_quant)[i]) {
            fw.tensors[i] = fake_quantize(w, *(*opts.stored_weight_quant)[i]);
        } else if (opts.weight_bits > 0) {
            fw.tensors[i] = fake_quantize(w, calibrate_params(w, opts.weight_bits,
                                                              opts.weight_scheme));
        } else {
            fw.tensors[i] = w;
        }
    }
    return fw;
}

EvalOutput evaluate_ann(const NetworkSpec& spec, const NetworkWeights& weights,
                        const PatchDataset& set) {
    if (set.samples.empty()) throw_input("cannot evaluate on an empty dataset");
    EvalOutput out;
    std::vector<int> truth;
    for (const auto& sample : set.samples) {
        Tensor logits = ann_forward(spec, weights, sample.patch);
        out.predictions.push_back(argmax(logits));
        truth.push_back(sample.label - 1);
    }
    out.metrics = compute_metrics(truth, out.predictions, set.num_classes);
    return out;
}

EvalOutput evaluate_snn(const NetworkSpec& spec, const NetworkWeights& weights,
                        const std::vector<LifParams>& lif, const PatchDataset& set,
                        const EvalOptions& opts) {
    if (set.samples.empty()) throw_input("cannot evaluate on an empty dataset");
    NetworkWeights fw = prepare_forward_weights(spec, weights, opts);
    SnnOptions fwd;
    fwd.timesteps = opts.timesteps;
    fwd.potential_bits = opts.potential_bits;

    EvalOutput out;
    std::vector<int> truth;
    for (const auto& sample : set.samples) {
        QuantParams input_params;
        fwd.input_quant = nullptr;
        if (opts.fixed_input_quant) {
            fwd.input_quant = opts.fixed_input_quant;
        } else if (opts.input_bits > 0) {
            input_params = calibrate_params(sample.patch, opts.input_bits, opts.input_scheme);
            fwd.input_quant = &input_params;
        }
        auto res = snn_forward(spec, fw, lif, sample.patch, fwd);
        Tensor u = res.potentials;
        if (opts.quantize_output_potentials && opts.potential_bits > 0) {
            u = fake_quantize(u, calibrate_params(u, opts.potential_bits, QuantScheme::scale));
        }
        out.predictions.push_back(argmax(u));
        truth.push_back(sample.label - 1);
    }
    out.metrics = compute_metrics(truth, out.predictions, set.num_classes);
    return out;
}

// ---- training loops ----

namespace {

std::vector<std::size_t> epoch_order(std::size_t n, Rng& rng) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order);
    return order;
}

double wall_ms_since(const std::chrono::steady_clock::time_point& start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
}

}  // namespace

TrainResult train_ann(const NetworkSpec& spec, const PatchDataset& train_set,
                      const PatchDataset& test_set, const AnnTrainConfig& cfg) {
    if (train_set.samples.empty()) throw_input("ANN training needs a non-empty training set");
    if (spec.mode != NetworkMode::ann) throw_config("train_ann needs a spec in ann mode");

    Rng root(cfg.seed);
    Rng init_rng = root.fork("ann-init");
    Rng shuffle_rng = root.fork("ann-shuffle");
    Rng dropout_rng = root.fork("ann-dropout");

    NetworkWeights weights = init_weights(spec, init_rng);
    SgdOptimizer opt(cfg.momentum, cfg.weight_decay);

    TrainResult result;
    result.best = Checkpoint(spec);
    result.best_test_oa = -1.0;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto start = std::chrono::steady_clock::now();
        const double lr = cfg.schedule.rate_for_epoch(epoch);
        auto order = epoch_order(train_set.samples.size(), shuffle_rng);

        double loss_sum = 0.0;
        std::int64_t correct = 0;
        std::size_t cursor = 0;
        while (cursor < order.size()) {
            const std::size_t batch_end =
                std::min(cursor + static_cast<std::size_t>(cfg.batch_size), order.size());
            const double inv_batch = 1.0 / static_cast<double>(batch_end - cursor);

            std::vector<Tensor> batch_grads(spec.layers.size());
            for (std::size_t i = 0; i < spec.layers.size(); ++i) {
                if (spec.layers[i].has_weights()) {
                    batch_grads[i] = Tensor(layer_weight_shape(spec.layers[i]));
                }
            }
            for (std::size_t s = cursor; s < batch_end; ++s) {
                const PatchSample& sample = train_set.samples[order[s]];
                AnnTrace trace;
                Tensor logits =
                    ann_forward(spec, weights, sample.patch, true, &dropout_rng, &trace);
                auto lg = loss_and_output_grad(logits, sample.label - 1);
                if (std::isnan(lg.loss)) {
                    throw_run("ANN training diverged (NaN loss) at epoch " +
                              std::to_string(epoch));
                }
                loss_sum += lg.loss;
                if (argmax(logits) == sample.label - 1) ++correct;
                auto wg = ann_backward(spec, weights, trace, lg.grad);
                for (std::size_t i = 0; i < wg.size(); ++i) {
                    if (wg[i].empty()) continue;
                    for (std::int64_t k = 0; k < wg[i].size(); ++k) {
                        batch_grads[i][k] += wg[i][k];
                    }
                }
            }

            std::vector<double*> params;
            std::vector<double> grads;
            for (std::size_t i = 0; i < spec.layers.size(); ++i) {
                if (batch_grads[i].empty()) continue;
                Tensor& w = weights.tensors[i];
                for (std::int64_t k = 0; k < w.size(); ++k) {
                    params.push_back(&w[k]);
                    grads.push_back(batch_grads[i][k] * inv_batch);
                }
            }
            opt.step(params, grads, lr);
            cursor = batch_end;
        }

        EpochLog log;
        log.epoch = epoch;
        log.lr = lr;
        log.loss = loss_sum / static_cast<double>(train_set.samples.size());
        log.train_oa = static_cast<double>(correct) / static_cast<double>(train_set.samples.size());
        log.test_oa = test_set.samples.empty()
                          ? 0.0
                          : evaluate_ann(spec, weights, test_set).metrics.oa;
        log.wall_ms = wall_ms_since(start);
        result.log.push_back(log);

        if (log.test_oa > result.best_test_oa) {
            result.best_test_oa = log.test_oa;
            result.best_epoch = epoch;
            result.best.weights = weights;
        }
    }
    if (result.best_epoch == 0) result.best.weights = weights;
    return result;
}

TrainResult train_snn(const Checkpoint& init, const PatchDataset& train_set,
                      const PatchDataset& test_set, const SnnTrainConfig& cfg) {
    if (train_set.samples.empty()) throw_input("SNN training needs a non-empty training set");
    const NetworkSpec& spec = init.spec;
    if (spec.mode != NetworkMode::snn) throw_config("train_snn needs a spec in snn mode");
    if (!init.thresholds) throw_config("SNN training needs calibrated thresholds");

    const auto spiking = spiking_layer_indices(spec);
    if (init.leak.size() != spiking.size() || init.thresholds->size() != spiking.size()) {
        throw_config("LIF parameter count does not match the spiking layers");
    }

    Rng root(cfg.seed);
    Rng shuffle_rng = root.fork("snn-shuffle");
    Rng dropout_rng = root.fork("snn-dropout");

    NetworkWeights weights = init.weights;
    std::vector<double> thresholds = *init.thresholds;
    std::vector<double> leaks = init.leak;
    AdamOptimizer opt;

    TrainResult result;
    result.best = Checkpoint(spec);
    result.best_test_oa = -1.0;

    const bool quant_on = cfg.bits > 0;

    auto lif_params = [&]() {
        std::vector<LifParams> lif(spiking.size());
        for (std::size_t s = 0; s < spiking.size(); ++s) lif[s] = {leaks[s], thresholds[s]};
        return lif;
    };

    EvalOptions eval_opts;
    eval_opts.timesteps = cfg.timesteps;
    eval_opts.potential_bits = cfg.potential_bits;
    eval_opts.weight_bits = quant_on ? cfg.bits : 0;
    eval_opts.weight_scheme = QuantScheme::affine;
    eval_opts.input_bits = quant_on ? cfg.bits : 0;
    eval_opts.input_scheme = QuantScheme::affine;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto start = std::chrono::steady_clock::now();
        const double lr = cfg.schedule.rate_for_epoch(epoch);
        auto order = epoch_order(train_set.samples.size(), shuffle_rng);

        double loss_sum = 0.0;
        std::int64_t correct = 0;
        std::size_t cursor = 0;
        while (cursor < order.size()) {
            const std::size_t batch_end =
                std::min(cursor + static_cast<std::size_t>(cfg.batch_size), order.size());
            const double inv_batch = 1.0 / static_cast<double>(batch_end - cursor);

            // Mini-batch range refresh: weight ranges from the current master
            // weights, input range from the batch patches.
            NetworkWeights fq_weights;
            fq_weights.tensors.resize(spec.layers.size());
            std::vector<std::optional<QuantParams>> wparams(spec.layers.size());
            for (std::size_t i = 0; i < spec.layers.size(); ++i) {
                const Tensor& w = weights.tensors[i];
                if (w.empty()) continue;
                if (quant_on) {
                    wparams[i] = calibrate_params(w, cfg.bits, QuantScheme::affine);
                    fq_weights.tensors[i] = fake_quantize(w, *wparams[i]);
                } else {
                    fq_weights.tensors[i] = w;
                }
            }
            QuantParams input_params;
            if (quant_on) {
                double lo = train_set.samples[order[cursor]].patch[0];
                double hi = lo;
                for (std::size_t s = cursor; s < batch_end; ++s) {
                    const Tensor& p = train_set.samples[order[s]].patch;
                    for (std::int64_t k = 0; k < p.size(); ++k) {
                        lo = std::min(lo, p[k]);
                        hi = std::max(hi, p[k]);
                    }
                }
                input_params = make_quant_params(lo, hi, cfg.bits, QuantScheme::affine);
            }

            const auto lif = lif_params();
            ParamGrads batch_grads;
            batch_grads.weights.resize(spec.layers.size());
            for (std::size_t i = 0; i < spec.layers.size(); ++i) {
                if (spec.layers[i].has_weights()) {
                    batch_grads.weights[i] = Tensor(layer_weight_shape(spec.layers[i]));
                }
            }
            batch_grads.threshold.assign(spiking.size(), 0.0);
            batch_grads.leak.assign(spiking.size(), 0.0);

            SnnOptions fwd;
            fwd.timesteps = cfg.timesteps;
            fwd.training = true;
            fwd.dropout_rng = &dropout_rng;
            fwd.potential_bits = cfg.potential_bits;
            fwd.record_trace = true;
            fwd.input_quant = quant_on ? &input_params : nullptr;

            for (std::size_t s = cursor; s < batch_end; ++s) {
                const PatchSample& sample = train_set.samples[order[s]];
                auto res = snn_forward(spec, fq_weights, lif, sample.patch, fwd);
                auto lg = loss_and_output_grad(res.potentials, sample.label - 1);
                if (std::isnan(lg.loss)) {
                    throw_run("SNN training diverged (NaN loss) at epoch " +
                              std::to_string(epoch));
                }
                loss_sum += lg.loss;
                if (argmax(res.potentials) == sample.label - 1) ++correct;
                auto g = qstdb_backward(spec, fq_weights, lif, res.trace, lg.grad, cfg.gamma);
                batch_grads.accumulate(g);
            }
            batch_grads.scale(inv_batch);

            // Straight-through estimator from forward-weight grads to master
            // grads; ranges were just refreshed, so the mask passes everything.
            std::vector<double*> params;
            std::vector<double> grads;
            for (std::size_t i = 0; i < spec.layers.size(); ++i) {
                if (batch_grads.weights[i].empty()) continue;
                Tensor master_grad =
                    quant_on ? ste_backward(batch_grads.weights[i], weights.tensors[i], *wparams[i])
                             : std::move(batch_grads.weights[i]);
                Tensor& w = weights.tensors[i];
                for (std::int64_t k = 0; k < w.size(); ++k) {
                    params.push_back(&w[k]);
                    grads.push_back(master_grad[k]);
                }
            }
            for (std::size_t s = 0; s < spiking.size(); ++s) {
                params.push_back(&thresholds[s]);
                grads.push_back(batch_grads.threshold[s]);
                params.push_back(&leaks[s]);
                grads.push_back(batch_grads.leak[s]);
            }
            opt.step(params, grads, lr);
            for (auto& v : thresholds) v = std::max(v, kMinThreshold);
            cursor = batch_end;
        }

        EpochLog log;
        log.epoch = epoch;
        log.lr = lr;
        log.loss = loss_sum / static_cast<double>(train_set.samples.size());
        log.train_oa = static_cast<double>(correct) / static_cast<double>(train_set.samples.size());
        if (!test_set.samples.empty()) {
            log.test_oa =
                evaluate_snn(spec, weights, lif_params(), test_set, eval_opts).metrics.oa;
        }
        log.wall_ms = wall_ms_since(start);
        result.log.push_back(log);

        if (log.test_oa > result.best_test_oa) {
            result.best_test_oa = log.test_oa;
            result.best_epoch = epoch;
            result.best.weights = weights;
            result.best.leak = leaks;
            result.best.thresholds = thresholds;
        }
    }
    if (result.best_epoch == 0) {
        result.best.weights = weights;
        result.best.leak = leaks;
        result.best.thresholds = thresholds;
    }
    return result;
}

}  // namespace hsnn
