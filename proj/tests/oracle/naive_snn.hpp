#pragma once

// Independent brute-force simulator for a two-layer spiking net (linear LIF
// hidden layer + accumulate-only output). Written with naive loops against
// the recurrence directly; used as the bit-for-bit dynamics oracle.

#include <vector>

namespace oracle {

struct TwoLayerNet {
    int n_in = 0;
    int n_hidden = 0;
    int n_out = 0;
    std::vector<double> w1;  // [n_hidden][n_in]
    std::vector<double> w2;  // [n_out][n_hidden]
    double leak = 1.0;
    double threshold = 1.0;
};

struct SimResult {
    std::vector<double> potentials;                 // output accumulator after T steps
    std::vector<std::vector<double>> hidden_spikes; // [t][n_hidden]
};

inline SimResult simulate(const TwoLayerNet& net, const std::vector<double>& input, int steps) {
    SimResult res;
    res.potentials.assign(static_cast<std::size_t>(net.n_out), 0.0);
    std::vector<double> u(static_cast<std::size_t>(net.n_hidden), 0.0);
    std::vector<double> o_prev(static_cast<std::size_t>(net.n_hidden), 0.0);

    for (int t = 0; t < steps; ++t) {
        std::vector<double> o(static_cast<std::size_t>(net.n_hidden), 0.0);
        for (int h = 0; h < net.n_hidden; ++h) {
            double drive = 0.0;
            for (int j = 0; j < net.n_in; ++j) {
                drive += net.w1[static_cast<std::size_t>(h) * net.n_in + j] *
                         input[static_cast<std::size_t>(j)];
            }
            u[static_cast<std::size_t>(h)] = net.leak * u[static_cast<std::size_t>(h)] + drive -
                                             net.threshold * o_prev[static_cast<std::size_t>(h)];
            const double z = u[static_cast<std::size_t>(h)] / net.threshold - 1.0;
            o[static_cast<std::size_t>(h)] = z > 0.0 ? 1.0 : 0.0;
        }
        for (int k = 0; k < net.n_out; ++k) {
            double acc = 0.0;
            for (int h = 0; h < net.n_hidden; ++h) {
                acc += net.w2[static_cast<std::size_t>(k) * net.n_hidden + h] *
                       o[static_cast<std::size_t>(h)];
            }
            res.potentials[static_cast<std::size_t>(k)] += acc;
        }
        res.hidden_spikes.push_back(o);
        o_prev = o;
    }
    return res;
}

}  // namespace oracle
