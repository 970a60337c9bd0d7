#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "alis/nn_ops.hpp"
#include "alis/quant.hpp"
#include "alis/weights.hpp"

namespace alis {

// Geometry of one convolution a config demands. Weight tensors are stored as
// "<name>.weight" (out, in/groups, k, k) and "<name>.bias" (out); quantized
// models add "<name>.weight_scale" (out).
struct ConvSpec {
    std::string name;
    int out_channels = 1;
    int in_channels = 1;
    int kernel = 1;
    int stride = 1;
    int padding = 0;
    int groups = 1;
    bool relu = false;

    std::size_t parameter_count() const {
        return static_cast<std::size_t>(out_channels) * (in_channels / groups) * kernel * kernel +
               static_cast<std::size_t>(out_channels);
    }
};

// Fully connected layer: "<name>.weight" (out, in) and "<name>.bias" (out).
struct LinearSpec {
    std::string name;
    int out_features = 1;
    int in_features = 1;

    std::size_t parameter_count() const {
        return static_cast<std::size_t>(out_features) * in_features + out_features;
    }
};

// Min/max statistics of each conv layer's input and output, filled during
// float forwards over calibration data.
struct ActivationRecorder {
    struct Entry {
        CalibrationStats input;
        CalibrationStats output;
    };
    std::map<std::string, Entry> layers;

    void record(const std::string& name, const Tensor& in, const Tensor& out);
};

struct QuantizedConv {
    QuantConvWeights weights;
    QuantParams input_qp;
    QuantParams output_qp;
};

/// A convolution (optionally followed by ReLU) in float or int8 form.
///
/// The int8 form quantizes its float input with the calibrated input
/// parameters, runs qconv2d and hands back the dequantized result. Chained
/// int8 layers therefore see exactly the int8 codes the previous layer
/// produced, since quantize(dequantize(q)) == q for matching parameters.
class ConvLayer {
public:
    ConvLayer() = default;
    ConvLayer(std::string name, ConvWeights w, bool relu);
    ConvLayer(std::string name, QuantizedConv q, bool relu);

    const std::string& name() const { return name_; }
    bool relu() const { return relu_; }
    bool quantized() const { return q_.has_value(); }
    const ConvWeights& weights() const { return w_; }
    const QuantizedConv& quantized_weights() const { return *q_; }

    Tensor forward(const Tensor& x, ActivationRecorder* rec = nullptr) const;

private:
    std::string name_;
    ConvWeights w_;
    std::optional<QuantizedConv> q_;
    bool relu_ = false;
};

// Builds the layer named by `spec` from `weights`, checking every shape.
// Throws LoadError naming the offending tensor.
ConvLayer load_conv(const WeightMap& weights, const ConvSpec& spec);

// Float weights of a linear layer; int8 storage is dequantized.
LinearWeights load_linear(const WeightMap& weights, const LinearSpec& spec);

}  // namespace alis
