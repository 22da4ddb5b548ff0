#pragma once

#include "hsnn/ops.hpp"
#include "hsnn/tensor.hpp"

namespace hsnn {

enum class QuantScheme { affine, scale };

const char* quant_scheme_name(QuantScheme s);
QuantScheme quant_scheme_from_name(const std::string& name);

// Per-tensor quantization descriptor. Integers live in
// [-2^(b-1), 2^(b-1)-1]; the scale scheme clamps symmetrically to
// [-(2^(b-1)-1), 2^(b-1)-1] and keeps zero exact.
struct QuantParams {
    QuantScheme scheme = QuantScheme::scale;
    int bits = 8;
    double scale = 1.0;
    int zero_point = 0;  // 0 under the scale scheme
    double w_min = 0.0;
    double w_max = 0.0;

    int qmin() const { return scheme == QuantScheme::scale ? -((1 << (bits - 1)) - 1) : -(1 << (bits - 1)); }
    int qmax() const { return (1 << (bits - 1)) - 1; }
};

// Range calibration from the tensor's extrema. Degenerate (all-constant)
// ranges are widened by eps = 1e-12 so the scale stays finite and zero maps
// to zero.
QuantParams calibrate_params(const Tensor& t, int bits, QuantScheme scheme);
// Same calibration from an externally observed range (e.g. over a mini-batch).
QuantParams make_quant_params(double lo, double hi, int bits, QuantScheme scheme);

// Round to nearest, ties away from zero, then clamp to the integer range.
QuantTensor quantize(const Tensor& t, const QuantParams& p);
Tensor dequantize(const QuantTensor& q, const QuantParams& p);
Tensor fake_quantize(const Tensor& t, const QuantParams& p);

// Straight-through estimator: upstream passes through where the weight lies
// inside [w_min, w_max] and is zeroed outside.
Tensor ste_backward(const Tensor& upstream, const Tensor& w, const QuantParams& p);

// Integer convolution followed by one floating-point rescale per element.
// Accumulation is 64-bit; geometries that could overflow raise an internal
// error before any arithmetic runs.
Tensor scale_quantized_conv3d(const QuantTensor& xq, const QuantTensor& wq, double s_x, double s_w,
                              const Conv3dGeometry& g);
Tensor scale_quantized_conv2d(const QuantTensor& xq, const QuantTensor& wq, double s_x, double s_w,
                              const Conv2dGeometry& g);

}  // namespace hsnn
