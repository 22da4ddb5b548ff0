#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "hsnn/network.hpp"
#include "hsnn/ops.hpp"
#include "hsnn/rng.hpp"
#include "hsnn/tensor.hpp"

namespace oracle {

// input [1, n_in, 1, 1] -> linear LIF hidden -> accumulate-only classifier
inline hsnn::NetworkSpec two_layer_spec(int n_in, int n_hidden, int n_out) {
    hsnn::NetworkSpec spec;
    spec.architecture = "custom";
    spec.input = hsnn::InputDesc{1, n_in, 1, 1};
    spec.num_classes = n_out;
    spec.mode = hsnn::NetworkMode::snn;
    hsnn::LayerSpec hidden;
    hidden.kind = hsnn::LayerKind::linear;
    hidden.name = "fc1";
    hidden.in_features = n_in;
    hidden.out_features = n_hidden;
    spec.layers.push_back(hidden);
    hsnn::LayerSpec cls;
    cls.kind = hsnn::LayerKind::classifier;
    cls.name = "classifier";
    cls.in_features = n_hidden;
    cls.out_features = n_out;
    spec.layers.push_back(cls);
    return spec;
}

inline double central_diff(double* x, double h, const std::function<double()>& f) {
    const double x0 = *x;
    *x = x0 + h;
    const double fp = f();
    *x = x0 - h;
    const double fm = f();
    *x = x0;
    return (fp - fm) / (2.0 * h);
}

// max |a-b| normalized by the largest magnitude in b (the reference).
inline double rel_error_vs(const std::vector<double>& a, const std::vector<double>& b) {
    double diff = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff = std::max(diff, std::abs(a[i] - b[i]));
        scale = std::max(scale, std::abs(b[i]));
    }
    return diff / std::max(scale, 1e-12);
}

inline hsnn::Tensor random_tensor(std::vector<int> shape, hsnn::Rng& rng, double lo = -1.0,
                                  double hi = 1.0) {
    hsnn::Tensor t(std::move(shape));
    for (std::int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
    return t;
}

// MAC count of a convolution walked tap by tap (padding positions included,
// matching how the counts are charged).
inline std::int64_t count_conv3d_macs(const std::vector<int>& in_shape,
                                      const hsnn::Conv3dGeometry& g) {
    const auto out = hsnn::conv3d_out_shape(in_shape, g);
    std::int64_t count = 0;
    for (int co = 0; co < g.out_channels; ++co)
        for (int zo = 0; zo < out[1]; ++zo)
            for (int xo = 0; xo < out[2]; ++xo)
                for (int yo = 0; yo < out[3]; ++yo)
                    for (int ci = 0; ci < g.in_channels; ++ci)
                        for (int zk = 0; zk < g.kernel[0]; ++zk)
                            for (int xk = 0; xk < g.kernel[1]; ++xk)
                                for (int yk = 0; yk < g.kernel[2]; ++yk) ++count;
    return count;
}

inline std::int64_t count_conv2d_macs(const std::vector<int>& in_shape,
                                      const hsnn::Conv2dGeometry& g) {
    const auto out = hsnn::conv2d_out_shape(in_shape, g);
    std::int64_t count = 0;
    for (int co = 0; co < g.out_channels; ++co)
        for (int xo = 0; xo < out[1]; ++xo)
            for (int yo = 0; yo < out[2]; ++yo)
                for (int ci = 0; ci < g.in_channels; ++ci)
                    for (int xk = 0; xk < g.kernel[0]; ++xk)
                        for (int yk = 0; yk < g.kernel[1]; ++yk) ++count;
    return count;
}

}  // namespace oracle
