#include "alis/mask.hpp"

#include <algorithm>
#include <string>

#include "alis/error.hpp"

namespace alis {

SegMask::SegMask(int w, int h, std::uint8_t fill) : width(w), height(h) {
    if (w < 0 || h < 0) throw ShapeError("mask dimensions must be non-negative");
    data.assign(static_cast<std::size_t>(w) * h, fill);
}

std::size_t SegMask::count() const {
    return static_cast<std::size_t>(std::count(data.begin(), data.end(), std::uint8_t{1}));
}

void SegMask::validate() const {
    if (width < 0 || height < 0) throw ShapeError("mask dimensions must be non-negative");
    if (data.size() != static_cast<std::size_t>(width) * height) {
        throw ShapeError("mask buffer holds " + std::to_string(data.size()) + " values for " +
                         std::to_string(width) + "x" + std::to_string(height));
    }
    for (std::uint8_t v : data) {
        if (v > 1) throw ShapeError("mask values must be 0 or 1");
    }
}

SegMask merge_instance_masks(const std::vector<SegMask>& instances) {
    if (instances.empty()) return {};
    SegMask out(instances.front().width, instances.front().height);
    for (const SegMask& m : instances) {
        if (m.width != out.width || m.height != out.height) {
            throw ShapeError("instance masks differ in size");
        }
        for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] |= m.data[i];
    }
    return out;
}

}  // namespace alis
