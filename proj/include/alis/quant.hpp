#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "alis/nn_ops.hpp"
#include "alis/tensor.hpp"

namespace alis {

/// Affine int8 mapping: real value = (q - zero_point) * scale.
struct QuantParams {
    float scale = 1.0f;
    int zero_point = 0;

    void validate() const;
    bool operator==(const QuantParams&) const = default;
};

struct QuantTensor {
    Shape shape;
    std::vector<std::int8_t> data;
    QuantParams qp;
};

// Running extrema of one activation stream.
struct CalibrationStats {
    float min = std::numeric_limits<float>::infinity();
    float max = -std::numeric_limits<float>::infinity();
    std::uint64_t count = 0;
};

CalibrationStats observe(CalibrationStats stats, const Tensor& t);

/// Asymmetric per-tensor parameters covering [min(min,0), max(max,0)] with
/// 255 steps. A range collapsed onto zero yields scale 1, zero point 0.
QuantParams compute_qparams(const CalibrationStats& stats);

// q = clamp(round_half_even(x / scale) + zero_point, -128, 127)
std::int8_t quantize_value(float x, QuantParams qp);
float dequantize_value(std::int8_t q, QuantParams qp);

QuantTensor quantize(const Tensor& t, QuantParams qp);
Tensor dequantize(const QuantTensor& qt);

/// Per-output-channel symmetric int8 weights with int32 bias expressed in
/// units of (input scale * channel scale).
struct QuantConvWeights {
    int out_channels = 1;
    int in_per_group = 1;
    int kernel_h = 1;
    int kernel_w = 1;
    int stride = 1;
    int padding = 0;
    int groups = 1;
    std::vector<std::int8_t> kernel;
    std::vector<float> channel_scales;
    std::vector<std::int32_t> bias;

    std::int8_t k(int oc, int ic, int ky, int kx) const {
        return kernel[((static_cast<std::size_t>(oc) * in_per_group + ic) * kernel_h + ky) *
                          kernel_w + kx];
    }
    std::size_t filter_size() const {
        return static_cast<std::size_t>(in_per_group) * kernel_h * kernel_w;
    }
    void validate() const;
};

// Symmetric per-row quantization of `values` (rows x row_len). An all-zero
// row gets scale 1.
void quantize_rows_symmetric(std::span<const float> values, int rows,
                             std::vector<std::int8_t>& q, std::vector<float>& scales);

QuantConvWeights quantize_conv_weights(const ConvWeights& w, QuantParams input_qp);

// Geometry-preserving copy with float weights reconstructed from int8.
ConvWeights dequantize_conv_weights(const QuantConvWeights& qw, QuantParams input_qp);

double requant_multiplier(QuantParams in, float weight_scale, QuantParams out);

inline std::int8_t requantize(std::int32_t acc, double multiplier, int zero_point, int lo) {
    double v = std::nearbyint(static_cast<double>(acc) * multiplier) + zero_point;
    if (v < lo) v = lo;
    if (v > 127) v = 127;
    return static_cast<std::int8_t>(v);
}

/// int8 convolution with int32 accumulation and per-channel requantization
/// into `out_qp`. With `fuse_relu` the output is clamped at the zero point,
/// i.e. at real 0.
QuantTensor qconv2d(const QuantTensor& qt, const QuantConvWeights& qw, QuantParams out_qp,
                    bool fuse_relu = false);

namespace ref {
QuantTensor qconv2d(const QuantTensor& qt, const QuantConvWeights& qw, QuantParams out_qp,
                    bool fuse_relu = false);
}  // namespace ref

}  // namespace alis
