#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace alis {

/// Binary person/background raster: 0 background, 1 person, row-major.
struct SegMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    SegMask() = default;
    SegMask(int w, int h, std::uint8_t fill = 0);

    std::uint8_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    std::size_t count() const;

    // Throws ShapeError when dimensions or values break the invariants.
    void validate() const;

    bool operator==(const SegMask&) const = default;
};

// Pixelwise OR; all masks must share dimensions.
SegMask merge_instance_masks(const std::vector<SegMask>& instances);

}  // namespace alis
