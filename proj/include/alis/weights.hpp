#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "alis/quant.hpp"

namespace alis {

enum class DType { f32, i8, i32 };

const char* dtype_name(DType d);
std::size_t dtype_size(DType d);
// Throws FormatError on an unknown name.
DType parse_dtype(const std::string& name);

/// One named tensor as it lives in a model file: raw little-endian bytes
/// plus the quantization metadata attached to int8 conv weights.
struct StoredTensor {
    DType dtype = DType::f32;
    std::vector<std::int64_t> shape;
    std::vector<std::uint8_t> bytes;
    std::optional<QuantParams> input_qparams;
    std::optional<QuantParams> output_qparams;

    std::size_t numel() const;

    static StoredTensor from_f32(std::vector<std::int64_t> shape, std::span<const float> v);
    static StoredTensor from_i8(std::vector<std::int64_t> shape, std::span<const std::int8_t> v);
    static StoredTensor from_i32(std::vector<std::int64_t> shape, std::span<const std::int32_t> v);

    // Typed views; throw LoadError when the dtype does not match.
    std::vector<float> to_f32() const;
    std::vector<std::int8_t> to_i8() const;
    std::vector<std::int32_t> to_i32() const;

    bool operator==(const StoredTensor&) const = default;
};

// Ordered by name, which is also the serialization order.
using WeightMap = std::map<std::string, StoredTensor>;

}  // namespace alis
