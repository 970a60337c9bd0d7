#include "alis/layers.hpp"

#include <algorithm>
#include <bit>
#include <cstring>

#include "alis/error.hpp"

namespace alis {

namespace {

template <typename T>
std::vector<std::uint8_t> encode_le(std::span<const T> v) {
    std::vector<std::uint8_t> out(v.size() * sizeof(T));
    std::memcpy(out.data(), v.data(), out.size());
    if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
        for (std::size_t i = 0; i < out.size(); i += sizeof(T)) {
            std::reverse(out.begin() + i, out.begin() + i + sizeof(T));
        }
    }
    return out;
}

template <typename T>
std::vector<T> decode_le(const std::vector<std::uint8_t>& bytes) {
    std::vector<std::uint8_t> b = bytes;
    if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
        for (std::size_t i = 0; i < b.size(); i += sizeof(T)) {
            std::reverse(b.begin() + i, b.begin() + i + sizeof(T));
        }
    }
    std::vector<T> out(b.size() / sizeof(T));
    std::memcpy(out.data(), b.data(), out.size() * sizeof(T));
    return out;
}

std::string shape_str(const std::vector<std::int64_t>& s) {
    std::string r = "[";
    for (std::size_t i = 0; i < s.size(); ++i) r += (i ? "," : "") + std::to_string(s[i]);
    return r + "]";
}

const StoredTensor& require(const WeightMap& weights, const std::string& name,
                            const std::vector<std::int64_t>& shape) {
    auto it = weights.find(name);
    if (it == weights.end()) throw LoadError("missing tensor '" + name + "'");
    if (it->second.shape != shape) {
        throw LoadError("tensor '" + name + "' has shape " + shape_str(it->second.shape) +
                        ", expected " + shape_str(shape));
    }
    return it->second;
}

}  // namespace

const char* dtype_name(DType d) {
    switch (d) {
        case DType::f32: return "float32";
        case DType::i8: return "int8";
        case DType::i32: return "int32";
    }
    return "?";
}

std::size_t dtype_size(DType d) { return d == DType::i8 ? 1 : 4; }

DType parse_dtype(const std::string& name) {
    if (name == "float32") return DType::f32;
    if (name == "int8") return DType::i8;
    if (name == "int32") return DType::i32;
    throw FormatError("unknown dtype '" + name + "'");
}

std::size_t StoredTensor::numel() const {
    std::size_t n = 1;
    for (auto d : shape) n *= static_cast<std::size_t>(d);
    return n;
}

StoredTensor StoredTensor::from_f32(std::vector<std::int64_t> shape, std::span<const float> v) {
    StoredTensor t{DType::f32, std::move(shape), encode_le(v), std::nullopt, std::nullopt};
    if (t.numel() != v.size()) throw ShapeError("stored tensor shape does not match its data");
    return t;
}

StoredTensor StoredTensor::from_i8(std::vector<std::int64_t> shape, std::span<const std::int8_t> v) {
    StoredTensor t{DType::i8, std::move(shape), encode_le(v), std::nullopt, std::nullopt};
    if (t.numel() != v.size()) throw ShapeError("stored tensor shape does not match its data");
    return t;
}

StoredTensor StoredTensor::from_i32(std::vector<std::int64_t> shape,
                                    std::span<const std::int32_t> v) {
    StoredTensor t{DType::i32, std::move(shape), encode_le(v), std::nullopt, std::nullopt};
    if (t.numel() != v.size()) throw ShapeError("stored tensor shape does not match its data");
    return t;
}

std::vector<float> StoredTensor::to_f32() const {
    if (dtype != DType::f32) throw LoadError(std::string("expected float32 tensor, found ") + dtype_name(dtype));
    return decode_le<float>(bytes);
}

std::vector<std::int8_t> StoredTensor::to_i8() const {
    if (dtype != DType::i8) throw LoadError(std::string("expected int8 tensor, found ") + dtype_name(dtype));
    return decode_le<std::int8_t>(bytes);
}

std::vector<std::int32_t> StoredTensor::to_i32() const {
    if (dtype != DType::i32) throw LoadError(std::string("expected int32 tensor, found ") + dtype_name(dtype));
    return decode_le<std::int32_t>(bytes);
}

void ActivationRecorder::record(const std::string& name, const Tensor& in, const Tensor& out) {
    Entry& e = layers[name];
    e.input = observe(e.input, in);
    e.output = observe(e.output, out);
}

ConvLayer::ConvLayer(std::string name, ConvWeights w, bool relu)
    : name_(std::move(name)), w_(std::move(w)), relu_(relu) {
    w_.validate();
}

ConvLayer::ConvLayer(std::string name, QuantizedConv q, bool relu)
    : name_(std::move(name)), q_(std::move(q)), relu_(relu) {
    q_->weights.validate();
    q_->input_qp.validate();
    q_->output_qp.validate();
    w_ = dequantize_conv_weights(q_->weights, q_->input_qp);
}

Tensor ConvLayer::forward(const Tensor& x, ActivationRecorder* rec) const {
    if (q_) {
        QuantTensor qx = quantize(x, q_->input_qp);
        Tensor y = dequantize(qconv2d(qx, q_->weights, q_->output_qp, relu_));
        if (rec) rec->record(name_, x, y);
        return y;
    }
    Tensor y = conv2d(x, w_);
    if (relu_) y = alis::relu(y);
    if (rec) rec->record(name_, x, y);
    return y;
}

ConvLayer load_conv(const WeightMap& weights, const ConvSpec& spec) {
    const std::vector<std::int64_t> kshape{spec.out_channels, spec.in_channels / spec.groups,
                                           spec.kernel, spec.kernel};
    const std::vector<std::int64_t> bshape{spec.out_channels};
    const std::string wname = spec.name + ".weight";
    const std::string bname = spec.name + ".bias";
    const StoredTensor& wt = require(weights, wname, kshape);
    const StoredTensor& bt = require(weights, bname, bshape);

    if (wt.dtype == DType::i8) {
        if (!wt.input_qparams || !wt.output_qparams) {
            throw LoadError("int8 tensor '" + wname + "' lacks activation quantization parameters");
        }
        const StoredTensor& st = require(weights, spec.name + ".weight_scale", bshape);
        QuantizedConv q;
        q.weights.out_channels = spec.out_channels;
        q.weights.in_per_group = spec.in_channels / spec.groups;
        q.weights.kernel_h = q.weights.kernel_w = spec.kernel;
        q.weights.stride = spec.stride;
        q.weights.padding = spec.padding;
        q.weights.groups = spec.groups;
        q.weights.kernel = wt.to_i8();
        q.weights.channel_scales = st.to_f32();
        if (bt.dtype != DType::i32) throw LoadError("tensor '" + bname + "' must be int32 in a quantized layer");
        q.weights.bias = bt.to_i32();
        q.input_qp = *wt.input_qparams;
        q.output_qp = *wt.output_qparams;
        return ConvLayer(spec.name, std::move(q), spec.relu);
    }

    ConvWeights w;
    w.out_channels = spec.out_channels;
    w.in_per_group = spec.in_channels / spec.groups;
    w.kernel_h = w.kernel_w = spec.kernel;
    w.stride = spec.stride;
    w.padding = spec.padding;
    w.groups = spec.groups;
    w.kernel = wt.to_f32();
    w.bias = bt.to_f32();
    return ConvLayer(spec.name, std::move(w), spec.relu);
}

LinearWeights load_linear(const WeightMap& weights, const LinearSpec& spec) {
    const std::string wname = spec.name + ".weight";
    const std::string bname = spec.name + ".bias";
    const StoredTensor& wt = require(weights, wname, {spec.out_features, spec.in_features});
    const StoredTensor& bt = require(weights, bname, {spec.out_features});
    LinearWeights lw;
    lw.out_features = spec.out_features;
    lw.in_features = spec.in_features;
    if (wt.dtype == DType::i8) {
        const StoredTensor& st = require(weights, spec.name + ".weight_scale", {spec.out_features});
        const auto q = wt.to_i8();
        const auto s = st.to_f32();
        lw.weight.resize(q.size());
        for (std::size_t o = 0; o < s.size(); ++o) {
            for (int i = 0; i < spec.in_features; ++i) {
                const std::size_t idx = o * static_cast<std::size_t>(spec.in_features) + i;
                lw.weight[idx] = static_cast<float>(q[idx] * static_cast<double>(s[o]));
            }
        }
    } else {
        lw.weight = wt.to_f32();
    }
    lw.bias = bt.to_f32();
    return lw;
}

}  // namespace alis
