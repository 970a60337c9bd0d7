#include "alis/nn_ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "alis/error.hpp"
#include "conv_detail.hpp"

namespace alis {

void ConvWeights::validate() const {
    if (out_channels < 1 || in_per_group < 1 || groups < 1 || stride < 1 || padding < 0) {
        throw ShapeError("conv weights have non-positive dimensions");
    }
    if (out_channels % groups != 0) {
        throw ShapeError("conv out_channels " + std::to_string(out_channels) +
                         " not divisible by groups " + std::to_string(groups));
    }
    if (kernel_h % 2 == 0 || kernel_w % 2 == 0 || kernel_h > 7 || kernel_w > 7) {
        throw ShapeError("conv kernel must be odd-sized, got " + std::to_string(kernel_h) + "x" +
                         std::to_string(kernel_w));
    }
    if (kernel.size() != kernel_size()) {
        throw ShapeError("conv kernel buffer has " + std::to_string(kernel.size()) +
                         " values, expected " + std::to_string(kernel_size()));
    }
    if (bias.size() != static_cast<std::size_t>(out_channels)) {
        throw ShapeError("conv bias has " + std::to_string(bias.size()) + " values, expected " +
                         std::to_string(out_channels));
    }
}

ConvWeights make_conv_weights(int out_ch, int in_ch, int k, int stride, int padding, int groups) {
    ConvWeights w;
    w.out_channels = out_ch;
    w.in_per_group = in_ch / groups;
    w.kernel_h = k;
    w.kernel_w = k;
    w.stride = stride;
    w.padding = padding;
    w.groups = groups;
    w.kernel.assign(w.kernel_size(), 0.0f);
    w.bias.assign(static_cast<std::size_t>(out_ch), 0.0f);
    return w;
}

Tensor conv2d(const Tensor& t, const ConvWeights& w) {
    w.validate();
    if (t.channels() != w.in_channels()) {
        throw ShapeError("conv2d expects " + std::to_string(w.in_channels()) +
                         " input channels, got " + std::to_string(t.channels()));
    }
    const int out_h = w.out_size(t.height(), w.kernel_h);
    const int out_w = w.out_size(t.width(), w.kernel_w);
    if (out_h < 1 || out_w < 1) throw ShapeError("conv2d input smaller than kernel");
    Tensor out(Shape{t.batch(), w.out_channels, out_h, out_w});

    const Shape in = t.shape();
    const int oc_per_group = w.out_channels / w.groups;
    const std::ptrdiff_t rows = static_cast<std::ptrdiff_t>(in.n) * w.out_channels * out_h;
    const float* src = t.data().data();
    float* dst = out.data().data();

#pragma omp parallel
    {
        std::vector<float> acc(static_cast<std::size_t>(out_w));
#pragma omp for schedule(static)
        for (std::ptrdiff_t r = 0; r < rows; ++r) {
            const int oy = static_cast<int>(r % out_h);
            const int oc = static_cast<int>((r / out_h) % w.out_channels);
            const int n = static_cast<int>(r / (static_cast<std::ptrdiff_t>(out_h) * w.out_channels));
            const int g = oc / oc_per_group;
            std::fill(acc.begin(), acc.end(), 0.0f);
            for (int ic = 0; ic < w.in_per_group; ++ic) {
                const float* plane = src + t.offset(n, g * w.in_per_group + ic, 0, 0);
                for (int ky = 0; ky < w.kernel_h; ++ky) {
                    const int iy = oy * w.stride - w.padding + ky;
                    if (iy < 0 || iy >= in.h) continue;
                    const float* row = plane + static_cast<std::ptrdiff_t>(iy) * in.w;
                    for (int kx = 0; kx < w.kernel_w; ++kx) {
                        detail::accumulate_tap(acc.data(), row, w.k(oc, ic, ky, kx), kx, in.w,
                                               out_w, w.stride, w.padding);
                    }
                }
            }
            float* o = dst + r * out_w;
            const float b = w.bias[static_cast<std::size_t>(oc)];
            for (int ox = 0; ox < out_w; ++ox) o[ox] = acc[static_cast<std::size_t>(ox)] + b;
        }
    }
    return out;
}

ConvWeights fold_batchnorm(const ConvWeights& w, const BatchNormParams& bn) {
    const auto n = static_cast<std::size_t>(w.out_channels);
    if (bn.gamma.size() != n || bn.beta.size() != n || bn.running_mean.size() != n ||
        bn.running_var.size() != n) {
        throw ShapeError("batch-norm parameters must have " + std::to_string(n) + " channels");
    }
    ConvWeights out = w;
    const std::size_t per = w.filter_size();
    for (std::size_t oc = 0; oc < n; ++oc) {
        const double inv_std = 1.0 / std::sqrt(static_cast<double>(bn.running_var[oc]) + bn.eps);
        const double scale = bn.gamma[oc] * inv_std;
        for (std::size_t i = 0; i < per; ++i) {
            out.kernel[oc * per + i] = static_cast<float>(w.kernel[oc * per + i] * scale);
        }
        out.bias[oc] = static_cast<float>((w.bias[oc] - bn.running_mean[oc]) * scale + bn.beta[oc]);
    }
    return out;
}

Tensor relu(const Tensor& t) {
    Tensor out(t.shape());
    auto src = t.data();
    auto dst = out.data();
    const auto n = static_cast<std::ptrdiff_t>(src.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) dst[i] = src[i] > 0.0f ? src[i] : 0.0f;
    return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
    if (!(a.shape() == b.shape())) throw ShapeError("add requires identical shapes");
    Tensor out(a.shape());
    auto x = a.data();
    auto y = b.data();
    auto dst = out.data();
    const auto n = static_cast<std::ptrdiff_t>(x.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) dst[i] = x[i] + y[i];
    return out;
}

std::vector<float> linear(std::span<const float> x, const LinearWeights& w) {
    if (x.size() != static_cast<std::size_t>(w.in_features) ||
        w.weight.size() != static_cast<std::size_t>(w.in_features) * w.out_features ||
        w.bias.size() != static_cast<std::size_t>(w.out_features)) {
        throw ShapeError("linear layer " + std::to_string(w.out_features) + "x" +
                         std::to_string(w.in_features) + " does not accept input of width " +
                         std::to_string(x.size()));
    }
    std::vector<float> y(static_cast<std::size_t>(w.out_features));
    for (int o = 0; o < w.out_features; ++o) {
        const float* row = w.weight.data() + static_cast<std::size_t>(o) * w.in_features;
        float acc = 0.0f;
        for (int i = 0; i < w.in_features; ++i) acc += row[i] * x[static_cast<std::size_t>(i)];
        y[static_cast<std::size_t>(o)] = acc + w.bias[static_cast<std::size_t>(o)];
    }
    return y;
}

std::array<double, 2> softmax2(std::array<float, 2> logits) {
    if (!std::isfinite(logits[0]) || !std::isfinite(logits[1])) {
        throw DomainError("softmax2 received a non-finite logit");
    }
    const double m = std::max(logits[0], logits[1]);
    const double e0 = std::exp(logits[0] - m);
    const double e1 = std::exp(logits[1] - m);
    const double s = e0 + e1;
    return {e0 / s, e1 / s};
}

}  // namespace alis
