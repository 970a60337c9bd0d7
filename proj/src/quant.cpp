#include "alis/quant.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "alis/error.hpp"
#include "conv_detail.hpp"

namespace alis {

void QuantParams::validate() const {
    if (!(std::isfinite(scale) && scale > 0.0f)) {
        throw DomainError("quantization scale must be positive and finite, got " +
                          std::to_string(scale));
    }
    if (zero_point < -128 || zero_point > 127) {
        throw DomainError("zero point " + std::to_string(zero_point) + " outside int8 range");
    }
}

CalibrationStats observe(CalibrationStats stats, const Tensor& t) {
    for (float v : t.data()) {
        stats.min = std::min(stats.min, v);
        stats.max = std::max(stats.max, v);
    }
    ++stats.count;
    return stats;
}

QuantParams compute_qparams(const CalibrationStats& stats) {
    if (stats.count < 1) throw DomainError("calibration stats have no observations");
    if (!std::isfinite(stats.min) || !std::isfinite(stats.max) || stats.min > stats.max) {
        throw DomainError("calibration stats are not a finite range");
    }
    const double lo = std::min(static_cast<double>(stats.min), 0.0);
    const double hi = std::max(static_cast<double>(stats.max), 0.0);
    if (hi == lo) return QuantParams{1.0f, 0};
    const float scale = static_cast<float>((hi - lo) / 255.0);
    double zp = std::nearbyint(-128.0 - lo / scale);
    zp = std::clamp(zp, -128.0, 127.0);
    return QuantParams{scale, static_cast<int>(zp)};
}

std::int8_t quantize_value(float x, QuantParams qp) {
    double q = std::nearbyint(static_cast<double>(x) / qp.scale) + qp.zero_point;
    q = std::clamp(q, -128.0, 127.0);
    return static_cast<std::int8_t>(q);
}

float dequantize_value(std::int8_t q, QuantParams qp) {
    return static_cast<float>((static_cast<int>(q) - qp.zero_point) * static_cast<double>(qp.scale));
}

QuantTensor quantize(const Tensor& t, QuantParams qp) {
    qp.validate();
    QuantTensor out{t.shape(), std::vector<std::int8_t>(t.numel()), qp};
    auto src = t.data();
    const auto n = static_cast<std::ptrdiff_t>(src.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) out.data[i] = quantize_value(src[i], qp);
    return out;
}

Tensor dequantize(const QuantTensor& qt) {
    Tensor out(qt.shape);
    auto dst = out.data();
    const auto n = static_cast<std::ptrdiff_t>(qt.data.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) dst[i] = dequantize_value(qt.data[i], qt.qp);
    return out;
}

void QuantConvWeights::validate() const {
    if (out_channels < 1 || in_per_group < 1 || groups < 1 || stride < 1 || padding < 0 ||
        out_channels % groups != 0) {
        throw ShapeError("quantized conv has inconsistent geometry");
    }
    if (kernel.size() != static_cast<std::size_t>(out_channels) * filter_size() ||
        channel_scales.size() != static_cast<std::size_t>(out_channels) ||
        bias.size() != static_cast<std::size_t>(out_channels)) {
        throw ShapeError("quantized conv buffers do not match its geometry");
    }
}

void quantize_rows_symmetric(std::span<const float> values, int rows, std::vector<std::int8_t>& q,
                             std::vector<float>& scales) {
    if (rows < 1 || values.size() % static_cast<std::size_t>(rows) != 0) {
        throw ShapeError("cannot split " + std::to_string(values.size()) + " values into " +
                         std::to_string(rows) + " rows");
    }
    const std::size_t len = values.size() / static_cast<std::size_t>(rows);
    q.assign(values.size(), 0);
    scales.assign(static_cast<std::size_t>(rows), 1.0f);
    for (std::size_t r = 0; r < static_cast<std::size_t>(rows); ++r) {
        float amax = 0.0f;
        for (std::size_t i = 0; i < len; ++i) amax = std::max(amax, std::abs(values[r * len + i]));
        const float scale = amax > 0.0f ? amax / 127.0f : 1.0f;
        scales[r] = scale;
        for (std::size_t i = 0; i < len; ++i) {
            double v = std::nearbyint(static_cast<double>(values[r * len + i]) / scale);
            q[r * len + i] = static_cast<std::int8_t>(std::clamp(v, -127.0, 127.0));
        }
    }
}

QuantConvWeights quantize_conv_weights(const ConvWeights& w, QuantParams input_qp) {
    w.validate();
    input_qp.validate();
    QuantConvWeights qw;
    qw.out_channels = w.out_channels;
    qw.in_per_group = w.in_per_group;
    qw.kernel_h = w.kernel_h;
    qw.kernel_w = w.kernel_w;
    qw.stride = w.stride;
    qw.padding = w.padding;
    qw.groups = w.groups;
    quantize_rows_symmetric(w.kernel, w.out_channels, qw.kernel, qw.channel_scales);
    qw.bias.resize(static_cast<std::size_t>(w.out_channels));
    constexpr double kMax = std::numeric_limits<std::int32_t>::max();
    constexpr double kMin = std::numeric_limits<std::int32_t>::min();
    for (std::size_t oc = 0; oc < qw.bias.size(); ++oc) {
        const double unit = static_cast<double>(input_qp.scale) * qw.channel_scales[oc];
        const double b = std::nearbyint(static_cast<double>(w.bias[oc]) / unit);
        qw.bias[oc] = static_cast<std::int32_t>(std::clamp(b, kMin, kMax));
    }
    return qw;
}

ConvWeights dequantize_conv_weights(const QuantConvWeights& qw, QuantParams input_qp) {
    ConvWeights w;
    w.out_channels = qw.out_channels;
    w.in_per_group = qw.in_per_group;
    w.kernel_h = qw.kernel_h;
    w.kernel_w = qw.kernel_w;
    w.stride = qw.stride;
    w.padding = qw.padding;
    w.groups = qw.groups;
    const std::size_t per = qw.filter_size();
    w.kernel.resize(qw.kernel.size());
    w.bias.resize(qw.bias.size());
    for (std::size_t oc = 0; oc < qw.bias.size(); ++oc) {
        const double s = qw.channel_scales[oc];
        for (std::size_t i = 0; i < per; ++i) {
            w.kernel[oc * per + i] = static_cast<float>(qw.kernel[oc * per + i] * s);
        }
        w.bias[oc] = static_cast<float>(qw.bias[oc] * s * input_qp.scale);
    }
    return w;
}

double requant_multiplier(QuantParams in, float weight_scale, QuantParams out) {
    return static_cast<double>(in.scale) * weight_scale / out.scale;
}

QuantTensor qconv2d(const QuantTensor& qt, const QuantConvWeights& qw, QuantParams out_qp,
                    bool fuse_relu) {
    qw.validate();
    qt.qp.validate();
    out_qp.validate();
    const Shape in = qt.shape;
    if (in.c != qw.in_per_group * qw.groups) {
        throw ShapeError("qconv2d expects " + std::to_string(qw.in_per_group * qw.groups) +
                         " input channels, got " + std::to_string(in.c));
    }
    const int out_h = (in.h + 2 * qw.padding - qw.kernel_h) / qw.stride + 1;
    const int out_w = (in.w + 2 * qw.padding - qw.kernel_w) / qw.stride + 1;
    if (out_h < 1 || out_w < 1) throw ShapeError("qconv2d input smaller than kernel");

    // Centre activations once; padding then reads as exact zero.
    std::vector<std::int16_t> centred(qt.data.size());
    for (std::size_t i = 0; i < centred.size(); ++i) {
        centred[i] = static_cast<std::int16_t>(qt.data[i] - qt.qp.zero_point);
    }

    QuantTensor out;
    out.shape = Shape{in.n, qw.out_channels, out_h, out_w};
    out.qp = out_qp;
    out.data.assign(out.shape.numel(), 0);

    std::vector<double> mult(static_cast<std::size_t>(qw.out_channels));
    for (int oc = 0; oc < qw.out_channels; ++oc) {
        mult[static_cast<std::size_t>(oc)] =
            requant_multiplier(qt.qp, qw.channel_scales[static_cast<std::size_t>(oc)], out_qp);
    }
    const int lo = fuse_relu ? std::max(-128, out_qp.zero_point) : -128;
    const int oc_per_group = qw.out_channels / qw.groups;
    const std::ptrdiff_t rows = static_cast<std::ptrdiff_t>(in.n) * qw.out_channels * out_h;

#pragma omp parallel
    {
        std::vector<std::int32_t> acc(static_cast<std::size_t>(out_w));
#pragma omp for schedule(static)
        for (std::ptrdiff_t r = 0; r < rows; ++r) {
            const int oy = static_cast<int>(r % out_h);
            const int oc = static_cast<int>((r / out_h) % qw.out_channels);
            const int n = static_cast<int>(r / (static_cast<std::ptrdiff_t>(out_h) * qw.out_channels));
            const int g = oc / oc_per_group;
            std::fill(acc.begin(), acc.end(), 0);
            for (int ic = 0; ic < qw.in_per_group; ++ic) {
                const std::int16_t* plane =
                    centred.data() +
                    ((static_cast<std::size_t>(n) * in.c + g * qw.in_per_group + ic) * in.h) * in.w;
                for (int ky = 0; ky < qw.kernel_h; ++ky) {
                    const int iy = oy * qw.stride - qw.padding + ky;
                    if (iy < 0 || iy >= in.h) continue;
                    const std::int16_t* row = plane + static_cast<std::ptrdiff_t>(iy) * in.w;
                    for (int kx = 0; kx < qw.kernel_w; ++kx) {
                        detail::accumulate_tap(acc.data(), row, qw.k(oc, ic, ky, kx), kx, in.w,
                                               out_w, qw.stride, qw.padding);
                    }
                }
            }
            std::int8_t* o = out.data.data() + r * out_w;
            const std::int32_t b = qw.bias[static_cast<std::size_t>(oc)];
            const double m = mult[static_cast<std::size_t>(oc)];
            for (int ox = 0; ox < out_w; ++ox) {
                o[ox] = requantize(acc[static_cast<std::size_t>(ox)] + b, m, out_qp.zero_point, lo);
            }
        }
    }
    return out;
}

}  // namespace alis
