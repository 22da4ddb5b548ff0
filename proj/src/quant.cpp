#include "hsnn/quant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hsnn/error.hpp"

namespace hsnn {

const char* quant_scheme_name(QuantScheme s) {
    return s == QuantScheme::affine ? "affine" : "scale";
}

QuantScheme quant_scheme_from_name(const std::string& name) {
    if (name == "affine") return QuantScheme::affine;
    if (name == "scale") return QuantScheme::scale;
    throw_config("unknown quantization scheme '" + name + "'");
}

QuantParams calibrate_params(const Tensor& t, int bits, QuantScheme scheme) {
    if (t.empty()) throw_input("cannot calibrate quantization on an empty tensor");
    double lo = t[0], hi = t[0];
    for (std::int64_t i = 1; i < t.size(); ++i) {
        lo = std::min(lo, t[i]);
        hi = std::max(hi, t[i]);
    }
    return make_quant_params(lo, hi, bits, scheme);
}

QuantParams make_quant_params(double lo, double hi, int bits, QuantScheme scheme) {
    if (bits < 2) throw_config("quantization bit width must be >= 2, got " + std::to_string(bits));
    if (bits > 31) throw_config("quantization bit width must be <= 31, got " + std::to_string(bits));
    if (!(lo <= hi)) throw_config("quantization range must satisfy lo <= hi");

    constexpr double eps = 1e-12;
    QuantParams p;
    p.scheme = scheme;
    p.bits = bits;
    p.w_min = lo;
    p.w_max = hi;
    if (scheme == QuantScheme::scale) {
        const double alpha = std::max(std::max(std::abs(lo), std::abs(hi)), eps);
        p.scale = (std::pow(2.0, bits - 1) - 1.0) / alpha;
        p.zero_point = 0;
    } else {
        double span = hi - lo;
        if (span < eps) {
            lo -= eps / 2;
            hi += eps / 2;
            span = hi - lo;
        }
        p.scale = (std::pow(2.0, bits) - 1.0) / span;
        p.zero_point = static_cast<int>(-(1 << (bits - 1)) - std::llround(p.scale * lo));
    }
    return p;
}

static double round_ties_away(double v) { return std::round(v); }

QuantTensor quantize(const Tensor& t, const QuantParams& p) {
    QuantTensor q;
    q.shape = t.shape();
    q.data.resize(static_cast<std::size_t>(t.size()));
    const double qmin = p.qmin(), qmax = p.qmax();
    for (std::int64_t i = 0; i < t.size(); ++i) {
        double v = round_ties_away(p.scale * t[i]) + p.zero_point;
        v = std::clamp(v, qmin, qmax);
        q.data[static_cast<std::size_t>(i)] = static_cast<std::int32_t>(v);
    }
    return q;
}

Tensor dequantize(const QuantTensor& q, const QuantParams& p) {
    Tensor t(q.shape);
    for (std::int64_t i = 0; i < q.size(); ++i) {
        t[i] = (static_cast<double>(q.data[static_cast<std::size_t>(i)]) - p.zero_point) / p.scale;
    }
    return t;
}

Tensor fake_quantize(const Tensor& t, const QuantParams& p) {
    Tensor out(t.shape());
    const double qmin = p.qmin(), qmax = p.qmax();
    for (std::int64_t i = 0; i < t.size(); ++i) {
        double v = round_ties_away(p.scale * t[i]) + p.zero_point;
        v = std::clamp(v, qmin, qmax);
        out[i] = (v - p.zero_point) / p.scale;
    }
    return out;
}

Tensor ste_backward(const Tensor& upstream, const Tensor& w, const QuantParams& p) {
    if (!upstream.same_shape(w)) {
        throw_config("STE gradient shape " + shape_to_string(upstream.shape()) +
                     " does not match weight shape " + shape_to_string(w.shape()));
    }
    Tensor out(upstream.shape());
    for (std::int64_t i = 0; i < w.size(); ++i) {
        out[i] = (w[i] >= p.w_min && w[i] <= p.w_max) ? upstream[i] : 0.0;
    }
    return out;
}

namespace {

std::int32_t abs_max(const QuantTensor& q) {
    std::int32_t m = 0;
    for (std::int32_t v : q.data) m = std::max(m, std::abs(v));
    return m;
}

void check_conv_accumulator(std::int64_t taps, std::int32_t x_max, std::int32_t w_max) {
    // Worst case |sum| <= taps * |x|max * |w|max must fit the 64-bit band.
    const double bound = static_cast<double>(taps) * x_max * w_max;
    if (bound >= static_cast<double>(std::numeric_limits<std::int64_t>::max()) * 0.5) {
        throw_internal("integer convolution accumulator could overflow: taps " +
                       std::to_string(taps) + ", |x|max " + std::to_string(x_max) + ", |w|max " +
                       std::to_string(w_max));
    }
}

}  // namespace

Tensor scale_quantized_conv3d(const QuantTensor& xq, const QuantTensor& wq, double s_x, double s_w,
                              const Conv3dGeometry& g) {
    auto out_shape = conv3d_out_shape(xq.shape, g);
    if (static_cast<int>(wq.shape.size()) != 5 || wq.shape[0] != g.out_channels ||
        wq.shape[1] != g.in_channels || wq.shape[2] != g.kernel[0] || wq.shape[3] != g.kernel[1] ||
        wq.shape[4] != g.kernel[2]) {
        throw_config("integer conv3d weight shape " + shape_to_string(wq.shape) +
                     " does not match geometry");
    }
    const std::int64_t taps =
        static_cast<std::int64_t>(g.in_channels) * g.kernel[0] * g.kernel[1] * g.kernel[2];
    check_conv_accumulator(taps, abs_max(xq), abs_max(wq));

    Tensor out(out_shape);
    const int di = xq.shape[1], hi = xq.shape[2], wi = xq.shape[3];
    const int do_ = out_shape[1], ho = out_shape[2], wo = out_shape[3];
    const int kd = g.kernel[0], kh = g.kernel[1], kw = g.kernel[2];
    const double rescale = 1.0 / (s_x * s_w);
    for (int co = 0; co < g.out_channels; ++co)
        for (int zo = 0; zo < do_; ++zo)
            for (int xo = 0; xo < ho; ++xo)
                for (int yo = 0; yo < wo; ++yo) {
                    std::int64_t acc = 0;
                    for (int ci = 0; ci < g.in_channels; ++ci)
                        for (int zk = 0; zk < kd; ++zk) {
                            const int zi = zo * g.stride[0] + zk - g.pad[0];
                            if (zi < 0 || zi >= di) continue;
                            for (int xk = 0; xk < kh; ++xk) {
                                const int xi = xo * g.stride[1] + xk - g.pad[1];
                                if (xi < 0 || xi >= hi) continue;
                                for (int yk = 0; yk < kw; ++yk) {
                                    const int yi = yo * g.stride[2] + yk - g.pad[2];
                                    if (yi < 0 || yi >= wi) continue;
                                    const std::int64_t xi_flat =
                                        ((static_cast<std::int64_t>(ci) * di + zi) * hi + xi) * wi +
                                        yi;
                                    const std::int64_t wi_flat =
                                        (((static_cast<std::int64_t>(co) * g.in_channels + ci) * kd +
                                          zk) * kh + xk) * kw + yk;
                                    acc += static_cast<std::int64_t>(
                                               xq.data[static_cast<std::size_t>(xi_flat)]) *
                                           wq.data[static_cast<std::size_t>(wi_flat)];
                                }
                            }
                        }
                    out[((static_cast<std::int64_t>(co) * do_ + zo) * ho + xo) * wo + yo] =
                        static_cast<double>(acc) * rescale;
                }
    return out;
}

Tensor scale_quantized_conv2d(const QuantTensor& xq, const QuantTensor& wq, double s_x, double s_w,
                              const Conv2dGeometry& g) {
    auto out_shape = conv2d_out_shape(xq.shape, g);
    if (static_cast<int>(wq.shape.size()) != 4 || wq.shape[0] != g.out_channels ||
        wq.shape[1] != g.in_channels || wq.shape[2] != g.kernel[0] || wq.shape[3] != g.kernel[1]) {
        throw_config("integer conv2d weight shape " + shape_to_string(wq.shape) +
                     " does not match geometry");
    }
    const std::int64_t taps = static_cast<std::int64_t>(g.in_channels) * g.kernel[0] * g.kernel[1];
    check_conv_accumulator(taps, abs_max(xq), abs_max(wq));

    Tensor out(out_shape);
    const int hi = xq.shape[1], wi = xq.shape[2];
    const int ho = out_shape[1], wo = out_shape[2];
    const int kh = g.kernel[0], kw = g.kernel[1];
    const double rescale = 1.0 / (s_x * s_w);
    for (int co = 0; co < g.out_channels; ++co)
        for (int xo = 0; xo < ho; ++xo)
            for (int yo = 0; yo < wo; ++yo) {
                std::int64_t acc = 0;
                for (int ci = 0; ci < g.in_channels; ++ci)
                    for (int xk = 0; xk < kh; ++xk) {
                        const int xi = xo * g.stride[0] + xk - g.pad[0];
                        if (xi < 0 || xi >= hi) continue;
                        for (int yk = 0; yk < kw; ++yk) {
                            const int yi = yo * g.stride[1] + yk - g.pad[1];
                            if (yi < 0 || yi >= wi) continue;
                            const std::int64_t xi_flat =
                                (static_cast<std::int64_t>(ci) * hi + xi) * wi + yi;
                            const std::int64_t wi_flat =
                                ((static_cast<std::int64_t>(co) * g.in_channels + ci) * kh + xk) *
                                    kw + yk;
                            acc += static_cast<std::int64_t>(
                                       xq.data[static_cast<std::size_t>(xi_flat)]) *
                                   wq.data[static_cast<std::size_t>(wi_flat)];
                        }
                    }
                out[(static_cast<std::int64_t>(co) * ho + xo) * wo + yo] =
                    static_cast<double>(acc) * rescale;
            }
    return out;
}

}  // namespace hsnn
