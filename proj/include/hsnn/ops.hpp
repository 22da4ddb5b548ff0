#pragma once

#include <array>

#include "hsnn/rng.hpp"
#include "hsnn/tensor.hpp"

namespace hsnn {

// Axis order for 3-D kernels is (spectral, height, width); tensors are
// [channels, spectral, height, width]. Convolution is cross-correlation
// (no kernel flip), so weight files are unambiguous.
struct Conv3dGeometry {
    int in_channels = 1;
    int out_channels = 1;
    std::array<int, 3> kernel{1, 1, 1};
    std::array<int, 3> stride{1, 1, 1};
    std::array<int, 3> pad{0, 0, 0};
};

struct Conv2dGeometry {
    int in_channels = 1;
    int out_channels = 1;
    std::array<int, 2> kernel{1, 1};
    std::array<int, 2> stride{1, 1};
    std::array<int, 2> pad{0, 0};
};

struct Pool2dGeometry {
    std::array<int, 2> window{1, 1};
    std::array<int, 2> stride{1, 1};
};

int conv_out_extent(int in, int kernel, int stride, int pad, const char* axis);

std::vector<int> conv3d_out_shape(const std::vector<int>& in_shape, const Conv3dGeometry& g);
std::vector<int> conv2d_out_shape(const std::vector<int>& in_shape, const Conv2dGeometry& g);
std::vector<int> pool2d_out_shape(const std::vector<int>& in_shape, const Pool2dGeometry& g);

// input [Ci,D,H,W], weights [Co,Ci,kd,kh,kw] -> [Co,Do,Ho,Wo]; no bias.
Tensor conv3d_forward(const Tensor& input, const Tensor& weights, const Conv3dGeometry& g);
// input [Ci,H,W], weights [Co,Ci,kh,kw] -> [Co,Ho,Wo]; no bias.
Tensor conv2d_forward(const Tensor& input, const Tensor& weights, const Conv2dGeometry& g);
// input flattened to [fi], weights [fo,fi] -> [fo]; no bias.
Tensor linear_forward(const Tensor& input, const Tensor& weights);
// input [C,H,W] -> [C,Ho,Wo]; window must tile the extents given the stride.
Tensor avgpool2d_forward(const Tensor& input, const Pool2dGeometry& g);

struct KernelGrads {
    Tensor input_grad;
    Tensor weight_grad;
};

KernelGrads conv3d_backward(const Tensor& upstream, const Tensor& input, const Tensor& weights,
                            const Conv3dGeometry& g);
KernelGrads conv2d_backward(const Tensor& upstream, const Tensor& input, const Tensor& weights,
                            const Conv2dGeometry& g);
KernelGrads linear_backward(const Tensor& upstream, const Tensor& input, const Tensor& weights);
Tensor avgpool2d_backward(const Tensor& upstream, const std::vector<int>& in_shape,
                          const Pool2dGeometry& g);

// Inverted dropout: survivors are scaled by 1/(1-rate) so eval mode is the
// identity. mask_out (optional) receives the applied per-element factors.
Tensor dropout_apply(const Tensor& input, double rate, Rng& rng, bool training,
                     Tensor* mask_out = nullptr);

}  // namespace hsnn
