#pragma once

#include <array>
#include <span>
#include <vector>

#include "alis/tensor.hpp"

namespace alis {

/// Convolution kernel (out_ch, in_ch_per_group, k_h, k_w) row-major, one
/// bias per output channel, symmetric zero padding.
struct ConvWeights {
    int out_channels = 1;
    int in_per_group = 1;
    int kernel_h = 1;
    int kernel_w = 1;
    int stride = 1;
    int padding = 0;
    int groups = 1;
    std::vector<float> kernel;
    std::vector<float> bias;

    int in_channels() const { return in_per_group * groups; }
    std::size_t kernel_size() const {
        return static_cast<std::size_t>(out_channels) * in_per_group * kernel_h * kernel_w;
    }
    std::size_t filter_size() const {
        return static_cast<std::size_t>(in_per_group) * kernel_h * kernel_w;
    }
    float k(int oc, int ic, int ky, int kx) const {
        return kernel[((static_cast<std::size_t>(oc) * in_per_group + ic) * kernel_h + ky) *
                          kernel_w + kx];
    }
    int out_size(int in, int k) const { return (in + 2 * padding - k) / stride + 1; }

    // Throws ShapeError on inconsistent fields.
    void validate() const;
};

// Allocates zeroed weights with consistent buffers.
ConvWeights make_conv_weights(int out_ch, int in_ch, int k, int stride, int padding,
                              int groups = 1);

struct BatchNormParams {
    std::vector<float> gamma;
    std::vector<float> beta;
    std::vector<float> running_mean;
    std::vector<float> running_var;
    float eps = 1e-5f;
};

/// Zero-padded cross-correlation (no kernel flip). Each output element
/// accumulates input-channel, then kernel-row, then kernel-column in float32
/// and adds its bias last; the order is fixed regardless of thread count.
Tensor conv2d(const Tensor& t, const ConvWeights& w);

// Returns weights whose convolution equals batch-norm applied to the
// original convolution.
ConvWeights fold_batchnorm(const ConvWeights& w, const BatchNormParams& bn);

Tensor relu(const Tensor& t);
Tensor add(const Tensor& a, const Tensor& b);

/// Fully connected layer, weight row-major (out_features x in_features).
struct LinearWeights {
    int out_features = 1;
    int in_features = 1;
    std::vector<float> weight;
    std::vector<float> bias;
};

std::vector<float> linear(std::span<const float> x, const LinearWeights& w);

// Two-class softmax with max subtraction. Throws DomainError on non-finite
// logits.
std::array<double, 2> softmax2(std::array<float, 2> logits);

namespace ref {
Tensor conv2d(const Tensor& t, const ConvWeights& w);
}  // namespace ref

}  // namespace alis
