#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "alis/mask.hpp"

namespace alis {

/// 8-bit interleaved RGB raster.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgb;

    Image() = default;
    Image(int w, int h, std::uint8_t fill = 0);

    std::uint8_t at(int x, int y, int c) const {
        return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }
    std::uint8_t& at(int x, int y, int c) {
        return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }
    bool empty() const { return width == 0 || height == 0; }
    bool operator==(const Image&) const = default;
};

// PNG (gray, RGB, with or without alpha, palette, 16-bit) or binary PPM/PGM,
// chosen by content. Gray inputs are replicated to three channels. Throws
// InputError when the file cannot be read or decoded.
Image read_image(const std::filesystem::path& path);
void write_png(const Image& img, const std::filesystem::path& path);

// Masks are 8-bit gray on disk: 0 background, 255 person. Readers treat
// values above 127 as person.
SegMask read_mask(const std::filesystem::path& path);
// PGM when the extension is .pgm, PNG otherwise.
void write_mask(const SegMask& mask, const std::filesystem::path& path);

}  // namespace alis
