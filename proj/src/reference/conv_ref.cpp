// Serial one-output-at-a-time convolution kernels. These mirror the loop
// order of the parallel kernels exactly and exist so tests and benchmarks can
// compare against an implementation without any scheduling.

#include <algorithm>
#include <cmath>
#include <string>

#include "alis/error.hpp"
#include "alis/nn_ops.hpp"
#include "alis/quant.hpp"

namespace alis::ref {

Tensor conv2d(const Tensor& t, const ConvWeights& w) {
    w.validate();
    if (t.channels() != w.in_channels()) {
        throw ShapeError("conv2d expects " + std::to_string(w.in_channels()) +
                         " input channels, got " + std::to_string(t.channels()));
    }
    const int out_h = w.out_size(t.height(), w.kernel_h);
    const int out_w = w.out_size(t.width(), w.kernel_w);
    Tensor out(Shape{t.batch(), w.out_channels, out_h, out_w});
    const int oc_per_group = w.out_channels / w.groups;
    for (int n = 0; n < t.batch(); ++n) {
        for (int oc = 0; oc < w.out_channels; ++oc) {
            const int g = oc / oc_per_group;
            for (int oy = 0; oy < out_h; ++oy) {
                for (int ox = 0; ox < out_w; ++ox) {
                    float acc = 0.0f;
                    for (int ic = 0; ic < w.in_per_group; ++ic) {
                        for (int ky = 0; ky < w.kernel_h; ++ky) {
                            const int iy = oy * w.stride - w.padding + ky;
                            if (iy < 0 || iy >= t.height()) continue;
                            for (int kx = 0; kx < w.kernel_w; ++kx) {
                                const int ix = ox * w.stride - w.padding + kx;
                                if (ix < 0 || ix >= t.width()) continue;
                                acc += w.k(oc, ic, ky, kx) *
                                       t.at(n, g * w.in_per_group + ic, iy, ix);
                            }
                        }
                    }
                    out.at(n, oc, oy, ox) = acc + w.bias[static_cast<std::size_t>(oc)];
                }
            }
        }
    }
    return out;
}

QuantTensor qconv2d(const QuantTensor& qt, const QuantConvWeights& qw, QuantParams out_qp,
                    bool fuse_relu) {
    qw.validate();
    const Shape in = qt.shape;
    if (in.c != qw.in_per_group * qw.groups) {
        throw ShapeError("qconv2d expects " + std::to_string(qw.in_per_group * qw.groups) +
                         " input channels, got " + std::to_string(in.c));
    }
    const int out_h = (in.h + 2 * qw.padding - qw.kernel_h) / qw.stride + 1;
    const int out_w = (in.w + 2 * qw.padding - qw.kernel_w) / qw.stride + 1;
    QuantTensor out;
    out.shape = Shape{in.n, qw.out_channels, out_h, out_w};
    out.qp = out_qp;
    out.data.assign(out.shape.numel(), 0);
    const int oc_per_group = qw.out_channels / qw.groups;
    const int lo = fuse_relu ? std::max(-128, out_qp.zero_point) : -128;
    for (int n = 0; n < in.n; ++n) {
        for (int oc = 0; oc < qw.out_channels; ++oc) {
            const int g = oc / oc_per_group;
            const double mult = requant_multiplier(qt.qp, qw.channel_scales[oc], out_qp);
            for (int oy = 0; oy < out_h; ++oy) {
                for (int ox = 0; ox < out_w; ++ox) {
                    std::int32_t acc = 0;
                    for (int ic = 0; ic < qw.in_per_group; ++ic) {
                        const int c = g * qw.in_per_group + ic;
                        for (int ky = 0; ky < qw.kernel_h; ++ky) {
                            const int iy = oy * qw.stride - qw.padding + ky;
                            if (iy < 0 || iy >= in.h) continue;
                            for (int kx = 0; kx < qw.kernel_w; ++kx) {
                                const int ix = ox * qw.stride - qw.padding + kx;
                                if (ix < 0 || ix >= in.w) continue;
                                const std::size_t idx =
                                    ((static_cast<std::size_t>(n) * in.c + c) * in.h + iy) * in.w + ix;
                                acc += (static_cast<std::int32_t>(qt.data[idx]) - qt.qp.zero_point) *
                                       static_cast<std::int32_t>(qw.k(oc, ic, ky, kx));
                            }
                        }
                    }
                    acc += qw.bias[static_cast<std::size_t>(oc)];
                    out.data[out.shape.numel() / in.n * n +
                             (static_cast<std::size_t>(oc) * out_h + oy) * out_w + ox] =
                        requantize(acc, mult, out_qp.zero_point, lo);
                }
            }
        }
    }
    return out;
}

}  // namespace alis::ref
