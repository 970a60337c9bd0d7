#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "alis/backbone.hpp"
#include "alis/config.hpp"
#include "alis/seghead.hpp"
#include "alis/weights.hpp"

namespace alis {

inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::size_t kAlignment = 64;

/// Everything a model file holds. Tensor offsets are not stored here: the
/// serializer lays tensors out canonically (name order, 64-byte aligned), so
/// equal bundles always produce equal bytes.
struct ModelBundle {
    std::uint32_t version = kFormatVersion;
    BackboneConfig backbone;
    HeadConfig head;
    Normalization normalization;
    bool quantized = false;
    WeightMap tensors;

    // Throws LoadError when a demanded tensor is missing or misshapen, an
    // unexpected tensor is present, or the quantized flag disagrees with the
    // conv weight dtypes.
    void validate() const;

    bool operator==(const ModelBundle&) const = default;
};

/// .alsn layout: "ALSN", u32 LE version, u64 LE header length, JSON header,
/// zero padding to a 64-byte boundary, then the tensor payload.
std::vector<std::uint8_t> serialize_model(const ModelBundle& m);
// Throws FormatError naming the defect (magic, version, truncation, offsets).
ModelBundle parse_model(std::span<const std::uint8_t> bytes);

void save_model(const ModelBundle& m, const std::filesystem::path& path);
ModelBundle load_model(const std::filesystem::path& path);

/// He-uniform kernels (bound sqrt(6 / fan_in)) and zero biases, drawn from one
/// seeded stream in conv-then-linear declaration order.
ModelBundle random_init(const BackboneConfig& bb, const HeadConfig& head, std::uint64_t seed,
                        const Normalization& norm = {});

struct ModelSize {
    std::size_t total = 0;    // serialized file size
    std::size_t payload = 0;  // sum of tensor byte sizes
    std::size_t header = 0;   // magic, version, length, JSON and alignment padding
};

ModelSize model_size_bytes(const ModelBundle& m);

// Learnable parameters the configs demand (kernels and biases).
std::size_t parameter_count(const BackboneConfig& bb, const HeadConfig& head);

}  // namespace alis
