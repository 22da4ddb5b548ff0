#include "hsnn/ops.hpp"

#include "hsnn/error.hpp"

namespace hsnn {

int conv_out_extent(int in, int kernel, int stride, int pad, const char* axis) {
    if (kernel <= 0 || stride <= 0 || pad < 0) {
        throw_config(std::string("bad convolution geometry on ") + axis + " axis: kernel " +
                     std::to_string(kernel) + ", stride " + std::to_string(stride) + ", pad " +
                     std::to_string(pad));
    }
    int span = in + 2 * pad - kernel;
    if (span < 0) {
        throw_config(std::string("kernel does not fit on ") + axis + " axis: extent " +
                     std::to_string(in) + " with pad " + std::to_string(pad) + " vs kernel " +
                     std::to_string(kernel));
    }
    return span / stride + 1;
}

std::vector<int> conv3d_out_shape(const std::vector<int>& in, const Conv3dGeometry& g) {
    if (in.size() != 4) throw_config("conv3d input must be rank 4, got " + shape_to_string(in));
    if (in[0] != g.in_channels) {
        throw_config("conv3d channel axis mismatch: input has " + std::to_string(in[0]) +
                     ", geometry expects " + std::to_string(g.in_channels));
    }
    return {g.out_channels, conv_out_extent(in[1], g.kernel[0], g.stride[0], g.pad[0], "spectral"),
            conv_out_extent(in[2], g.kernel[1], g.stride[1], g.pad[1], "height"),
            conv_out_extent(in[3], g.kernel[2], g.stride[2], g.pad[2], "width")};
}

std::vector<int> conv2d_out_shape(const std::vector<int>& in, const Conv2dGeometry& g) {
    if (in.size() != 3) throw_config("conv2d input must be rank 3, got " + shape_to_string(in));
    if (in[0] != g.in_channels) {
        throw_config("conv2d channel axis mismatch: input has " + std::to_string(in[0]) +
                     ", geometry expects " + std::to_string(g.in_channels));
    }
    return {g.out_channels, conv_out_extent(in[1], g.kernel[0], g.stride[0], g.pad[0], "height"),
            conv_out_extent(in[2], g.kernel[1], g.stride[1], g.pad[1], "width")};
}

std::vector<int> pool2d_out_shape(const std::vector<int>& in, const Pool2dGeometry& g) {
    if (in.size() != 3) throw_config("avgpool2d input must be rank 3, got " + shape_to_string(in));
    for (int axis = 0; axis < 2; ++axis) {
        int extent = in[static_cast<std::size_t>(axis + 1)];
        int w = g.window[static_cast<std::size_t>(axis)];
        int s = g.stride[static_cast<std::size_t>(axis)];
        const char* name = axis == 0 ? "height" : "width";
        if (w <= 0 || s <= 0 || w > extent || (extent - w) % s != 0) {
            throw_config(std::string("pooling window does not cover the ") + name +
                         " axis: extent " + std::to_string(extent) + ", window " +
                         std::to_string(w) + ", stride " + std::to_string(s));
        }
    }
    return {in[0], (in[1] - g.window[0]) / g.stride[0] + 1, (in[2] - g.window[1]) / g.stride[1] + 1};
}

static void check_conv3d_weights(const Tensor& w, const Conv3dGeometry& g) {
    const auto& s = w.shape();
    if (s.size() != 5 || s[0] != g.out_channels || s[1] != g.in_channels || s[2] != g.kernel[0] ||
        s[3] != g.kernel[1] || s[4] != g.kernel[2]) {
        throw_config("conv3d weight shape " + shape_to_string(s) + " does not match geometry [" +
                     std::to_string(g.out_channels) + "," + std::to_string(g.in_channels) + "," +
                     std::to_string(g.kernel[0]) + "," + std::to_string(g.kernel[1]) + "," +
                     std::to_string(g.kernel[2]) + "]");
    }
}

Tensor conv3d_forward(const Tensor& input, const Tensor& weights, const Conv3dGeometry& g) {
    auto out_shape = conv3d_out_shape(input.shape(), g);
    check_conv3d_weights(weights, g);
    Tensor out(out_shape);

    const int ci_n = g.in_channels, co_n = g.out_channels;
    const int di = input.extent(1), hi = input.extent(2), wi = input.extent(3);
    const int do_ = out_shape[1], ho = out_shape[2], wo = out_shape[3];
    const int kd = g.kernel[0], kh = g.kernel[1], kw = g.kernel[2];
    const double* x = input.data();
    const double* w = weights.data();
    double* y = out.data();

    // Accumulation order per output element is ascending (ci, kd, kh, kw),
    // matching a naive per-element loop bit for bit.
    for (int co = 0; co < co_n; ++co) {
        for (int ci = 0; ci < ci_n; ++ci) {
            const double* xc = x + static_cast<std::int64_t>(ci) * di * hi * wi;
            const double* wc =
                w + (static_cast<std::int64_t>(co) * ci_n + ci) * kd * kh * kw;
            for (int zk = 0; zk < kd; ++zk)
                for (int xk = 0; xk < kh; ++xk)
                    for (int yk = 0; yk < kw; ++yk) {
                        const double wv = wc[(static_cast<std::int64_t>(zk) * kh + xk) * kw + yk];
                        for (int zo = 0; zo < do_; ++zo) {
                            const int zi = zo * g.stride[0] + zk - g.pad[0];
                            if (zi < 0 || zi >= di) continue;
                            for (int xo = 0; xo < ho; ++xo) {
                                const int xi = xo * g.stride[1] + xk - g.pad[1];
                                if (xi < 0 || xi >= hi) continue;
                                double* yrow =
                                    y + ((static_cast<std::int64_t>(co) * do_ + zo) * ho + xo) * wo;
                                const double* xrow =
                                    xc + (static_cast<std::int64_t>(zi) * hi + xi) * wi;
                                for (int yo = 0; yo < wo; ++yo) {
                                    const int yi = yo * g.stride[2] + yk - g.pad[2];
                                    if (yi < 0 || yi >= wi) continue;
                                    yrow[yo] += wv * xrow[yi];
                                }
                            }
                        }
                    }
        }
    }
    return out;
}

KernelGrads conv3d_backward(const Tensor& upstream, const Tensor& input, const Tensor& weights,
                            const Conv3dGeometry& g) {
    auto out_shape = conv3d_out_shape(input.shape(), g);
    check_conv3d_weights(weights, g);
    if (upstream.shape() != out_shape) {
        throw_config("conv3d upstream gradient shape " + shape_to_string(upstream.shape()) +
                     " does not match forward output " + shape_to_string(out_shape));
    }
    KernelGrads grads{Tensor(input.shape()), Tensor(weights.shape())};

    const int ci_n = g.in_channels, co_n = g.out_channels;
    const int di = input.extent(1), hi = input.extent(2), wi = input.extent(3);
    const int do_ = out_shape[1], ho = out_shape[2], wo = out_shape[3];
    const int kd = g.kernel[0], kh = g.kernel[1], kw = g.kernel[2];
    const double* x = input.data();
    const double* w = weights.data();
    const double* gy = upstream.data();
    double* gx = grads.input_grad.data();
    double* gw = grads.weight_grad.data();

    for (int co = 0; co < co_n; ++co) {
        for (int ci = 0; ci < ci_n; ++ci) {
            const double* xc = x + static_cast<std::int64_t>(ci) * di * hi * wi;
            double* gxc = gx + static_cast<std::int64_t>(ci) * di * hi * wi;
            const std::int64_t wbase = (static_cast<std::int64_t>(co) * ci_n + ci) * kd * kh * kw;
            for (int zk = 0; zk < kd; ++zk)
                for (int xk = 0; xk < kh; ++xk)
                    for (int yk = 0; yk < kw; ++yk) {
                        const std::int64_t widx =
                            wbase + (static_cast<std::int64_t>(zk) * kh + xk) * kw + yk;
                        const double wv = w[widx];
                        double wg = 0.0;
                        for (int zo = 0; zo < do_; ++zo) {
                            const int zi = zo * g.stride[0] + zk - g.pad[0];
                            if (zi < 0 || zi >= di) continue;
                            for (int xo = 0; xo < ho; ++xo) {
                                const int xi = xo * g.stride[1] + xk - g.pad[1];
                                if (xi < 0 || xi >= hi) continue;
                                const double* gyrow =
                                    gy + ((static_cast<std::int64_t>(co) * do_ + zo) * ho + xo) * wo;
                                const double* xrow =
                                    xc + (static_cast<std::int64_t>(zi) * hi + xi) * wi;
                                double* gxrow =
                                    gxc + (static_cast<std::int64_t>(zi) * hi + xi) * wi;
                                for (int yo = 0; yo < wo; ++yo) {
                                    const int yi = yo * g.stride[2] + yk - g.pad[2];
                                    if (yi < 0 || yi >= wi) continue;
                                    wg += gyrow[yo] * xrow[yi];
                                    gxrow[yi] += gyrow[yo] * wv;
                                }
                            }
                        }
                        gw[widx] += wg;
                    }
        }
    }
    return grads;
}

static void check_conv2d_weights(const Tensor& w, const Conv2dGeometry& g) {
    const auto& s = w.shape();
    if (s.size() != 4 || s[0] != g.out_channels || s[1] != g.in_channels || s[2] != g.kernel[0] ||
        s[3] != g.kernel[1]) {
        throw_config("conv2d weight shape " + shape_to_string(s) + " does not match geometry [" +
                     std::to_string(g.out_channels) + "," + std::to_string(g.in_channels) + "," +
                     std::to_string(g.kernel[0]) + "," + std::to_string(g.kernel[1]) + "]");
    }
}

Tensor conv2d_forward(const Tensor& input, const Tensor& weights, const Conv2dGeometry& g) {
    auto out_shape = conv2d_out_shape(input.shape(), g);
    check_conv2d_weights(weights, g);
    Tensor out(out_shape);

    const int ci_n = g.in_channels, co_n = g.out_channels;
    const int hi = input.extent(1), wi = input.extent(2);
    const int ho = out_shape[1], wo = out_shape[2];
    const int kh = g.kernel[0], kw = g.kernel[1];
    const double* x = input.data();
    const double* w = weights.data();
    double* y = out.data();

    for (int co = 0; co < co_n; ++co) {
        for (int ci = 0; ci < ci_n; ++ci) {
            const double* xc = x + static_cast<std::int64_t>(ci) * hi * wi;
            const double* wc = w + (static_cast<std::int64_t>(co) * ci_n + ci) * kh * kw;
            for (int xk = 0; xk < kh; ++xk)
                for (int yk = 0; yk < kw; ++yk) {
                    const double wv = wc[static_cast<std::int64_t>(xk) * kw + yk];
                    for (int xo = 0; xo < ho; ++xo) {
                        const int xi = xo * g.stride[0] + xk - g.pad[0];
                        if (xi < 0 || xi >= hi) continue;
                        double* yrow = y + (static_cast<std::int64_t>(co) * ho + xo) * wo;
                        const double* xrow = xc + static_cast<std::int64_t>(xi) * wi;
                        for (int yo = 0; yo < wo; ++yo) {
                            const int yi = yo * g.stride[1] + yk - g.pad[1];
                            if (yi < 0 || yi >= wi) continue;
                            yrow[yo] += wv * xrow[yi];
                        }
                    }
                }
        }
    }
    return out;
}

KernelGrads conv2d_backward(const Tensor& upstream, const Tensor& input, const Tensor& weights,
                            const Conv2dGeometry& g) {
    auto out_shape = conv2d_out_shape(input.shape(), g);
    check_conv2d_weights(weights, g);
    if (upstream.shape() != out_shape) {
        throw_config("conv2d upstream gradient shape " + shape_to_string(upstream.shape()) +
                     " does not match forward output " + shape_to_string(out_shape));
    }
    KernelGrads grads{Tensor(input.shape()), Tensor(weights.shape())};

    const int ci_n = g.in_channels, co_n = g.out_channels;
    const int hi = input.extent(1), wi = input.extent(2);
    const int ho = out_shape[1], wo = out_shape[2];
    const int kh = g.kernel[0], kw = g.kernel[1];
    const double* x = input.data();
    const double* w = weights.data();
    const double* gy = upstream.data();
    double* gx = grads.input_grad.data();
    double* gw = grads.weight_grad.data();

    for (int co = 0; co < co_n; ++co) {
        for (int ci = 0; ci < ci_n; ++ci) {
            const double* xc = x + static_cast<std::int64_t>(ci) * hi * wi;
            double* gxc = gx + static_cast<std::int64_t>(ci) * hi * wi;
            const std::int64_t wbase = (static_cast<std::int64_t>(co) * ci_n + ci) * kh * kw;
            for (int xk = 0; xk < kh; ++xk)
                for (int yk = 0; yk < kw; ++yk) {
                    const std::int64_t widx = wbase + static_cast<std::int64_t>(xk) * kw + yk;
                    const double wv = w[widx];
                    double wg = 0.0;
                    for (int xo = 0; xo < ho; ++xo) {
                        const int xi = xo * g.stride[0] + xk - g.pad[0];
                        if (xi < 0 || xi >= hi) continue;
                        const double* gyrow = gy + (static_cast<std::int64_t>(co) * ho + xo) * wo;
                        const double* xrow = xc + static_cast<std::int64_t>(xi) * wi;
                        double* gxrow = gxc + static_cast<std::int64_t>(xi) * wi;
                        for (int yo = 0; yo < wo; ++yo) {
                            const int yi = yo * g.stride[1] + yk - g.pad[1];
                            if (yi < 0 || yi >= wi) continue;
                            wg += gyrow[yo] * xrow[yi];
                            gxrow[yi] += gyrow[yo] * wv;
                        }
                    }
                    gw[widx] += wg;
                }
        }
    }
    return grads;
}

Tensor linear_forward(const Tensor& input, const Tensor& weights) {
    if (weights.rank() != 2) {
        throw_config("linear weights must be rank 2, got " + shape_to_string(weights.shape()));
    }
    const int fo = weights.extent(0), fi = weights.extent(1);
    if (input.size() != fi) {
        throw_config("linear input length " + std::to_string(input.size()) +
                     " does not match weight columns " + std::to_string(fi));
    }
    Tensor out({fo});
    const double* x = input.data();
    const double* w = weights.data();
    for (int o = 0; o < fo; ++o) {
        double acc = 0.0;
        const double* row = w + static_cast<std::int64_t>(o) * fi;
        for (int i = 0; i < fi; ++i) acc += row[i] * x[i];
        out[o] = acc;
    }
    return out;
}

KernelGrads linear_backward(const Tensor& upstream, const Tensor& input, const Tensor& weights) {
    const int fo = weights.extent(0), fi = weights.extent(1);
    if (upstream.size() != fo) {
        throw_config("linear upstream gradient length " + std::to_string(upstream.size()) +
                     " does not match weight rows " + std::to_string(fo));
    }
    if (input.size() != fi) {
        throw_config("linear input length " + std::to_string(input.size()) +
                     " does not match weight columns " + std::to_string(fi));
    }
    KernelGrads grads{Tensor(input.shape()), Tensor(weights.shape())};
    const double* x = input.data();
    const double* w = weights.data();
    const double* gy = upstream.data();
    double* gx = grads.input_grad.data();
    double* gw = grads.weight_grad.data();
    for (int o = 0; o < fo; ++o) {
        const double go = gy[o];
        const double* row = w + static_cast<std::int64_t>(o) * fi;
        double* grow = gw + static_cast<std::int64_t>(o) * fi;
        for (int i = 0; i < fi; ++i) {
            grow[i] += go * x[i];
            gx[i] += go * row[i];
        }
    }
    return grads;
}

Tensor avgpool2d_forward(const Tensor& input, const Pool2dGeometry& g) {
    auto out_shape = pool2d_out_shape(input.shape(), g);
    Tensor out(out_shape);
    const int c_n = input.extent(0), hi = input.extent(1), wi = input.extent(2);
    const int ho = out_shape[1], wo = out_shape[2];
    const double inv = 1.0 / (static_cast<double>(g.window[0]) * g.window[1]);
    const double* x = input.data();
    double* y = out.data();
    for (int c = 0; c < c_n; ++c)
        for (int xo = 0; xo < ho; ++xo)
            for (int yo = 0; yo < wo; ++yo) {
                double acc = 0.0;
                for (int xk = 0; xk < g.window[0]; ++xk) {
                    const double* row = x + (static_cast<std::int64_t>(c) * hi +
                                             (xo * g.stride[0] + xk)) * wi + yo * g.stride[1];
                    for (int yk = 0; yk < g.window[1]; ++yk) acc += row[yk];
                }
                y[(static_cast<std::int64_t>(c) * ho + xo) * wo + yo] = acc * inv;
            }
    return out;
}

Tensor avgpool2d_backward(const Tensor& upstream, const std::vector<int>& in_shape,
                          const Pool2dGeometry& g) {
    auto out_shape = pool2d_out_shape(in_shape, g);
    if (upstream.shape() != out_shape) {
        throw_config("avgpool2d upstream gradient shape " + shape_to_string(upstream.shape()) +
                     " does not match forward output " + shape_to_string(out_shape));
    }
    Tensor gx(in_shape);
    const int c_n = in_shape[0], hi = in_shape[1], wi = in_shape[2];
    const int ho = out_shape[1], wo = out_shape[2];
    const double inv = 1.0 / (static_cast<double>(g.window[0]) * g.window[1]);
    const double* gy = upstream.data();
    double* gxd = gx.data();
    for (int c = 0; c < c_n; ++c)
        for (int xo = 0; xo < ho; ++xo)
            for (int yo = 0; yo < wo; ++yo) {
                const double go = gy[(static_cast<std::int64_t>(c) * ho + xo) * wo + yo] * inv;
                for (int xk = 0; xk < g.window[0]; ++xk) {
                    double* row = gxd + (static_cast<std::int64_t>(c) * hi +
                                         (xo * g.stride[0] + xk)) * wi + yo * g.stride[1];
                    for (int yk = 0; yk < g.window[1]; ++yk) row[yk] += go;
                }
            }
    return gx;
}

Tensor dropout_apply(const Tensor& input, double rate, Rng& rng, bool training, Tensor* mask_out) {
    if (rate < 0.0 || rate >= 1.0) {
        throw_config("dropout rate must lie in [0,1), got " + std::to_string(rate));
    }
    if (!training || rate == 0.0) {
        if (mask_out) *mask_out = Tensor(input.shape(), 1.0);
        return input;
    }
    Tensor out(input.shape());
    Tensor mask(input.shape());
    const double keep_scale = 1.0 / (1.0 - rate);
    for (std::int64_t i = 0; i < input.size(); ++i) {
        const double factor = rng.next_double() < rate ? 0.0 : keep_scale;
        mask[i] = factor;
        out[i] = input[i] * factor;
    }
    if (mask_out) *mask_out = std::move(mask);
    return out;
}

}  // namespace hsnn
