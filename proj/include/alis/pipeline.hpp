#pragma once

#include <array>
#include <optional>

#include "alis/config.hpp"
#include "alis/image_io.hpp"
#include "alis/mask.hpp"
#include "alis/model.hpp"
#include "alis/seghead.hpp"

namespace alis {

// Person box in source pixel coordinates; x1/y1 are exclusive edges.
struct BBox {
    double x0 = 0.0;
    double y0 = 0.0;
    double x1 = 0.0;
    double y1 = 0.0;

    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
    // Throws DomainError unless finite with x0 < x1 and y0 < y1.
    void validate() const;
    bool operator==(const BBox&) const = default;
};

/// Pushes each side out by 10% of the box's own extent on that axis, then
/// clamps to [0, img_w] x [0, img_h].
BBox enlarge_bbox(const BBox& b, int img_w, int img_h);

struct PreprocessOptions {
    int target_height = 1024;
    int pad_multiple = 32;
};

/// Everything needed to map between source pixels and network pixels.
struct ResizeRecord {
    int source_w = 0;
    int source_h = 0;
    int crop_x0 = 0;
    int crop_y0 = 0;
    int crop_w = 0;
    int crop_h = 0;
    int resized_w = 0;
    int resized_h = 0;
    int padded_w = 0;
    int padded_h = 0;

    // Continuous (corner-based) coordinate maps.
    std::array<double, 2> to_network(double sx, double sy) const;
    std::array<double, 2> to_source(double nx, double ny) const;

    bool operator==(const ResizeRecord&) const = default;
};

struct Preprocessed {
    Tensor input;  // 1 x 3 x padded_h x padded_w
    ResizeRecord record;
};

/// Crop to the enlarged box (whole image without one), scale to [0,1],
/// resize to the target height keeping the aspect ratio, normalize per
/// channel, zero-pad right and bottom to the next multiple of pad_multiple.
Preprocessed preprocess(const Image& img, const std::optional<BBox>& bbox, const Normalization& norm,
                        const PreprocessOptions& opts = {});

/// Person probability, padding removed, bilinear resize to the crop,
/// threshold (strictly greater), pasted into a source-size mask.
SegMask postprocess(const LogitMap& logits, const ResizeRecord& rec, double threshold = 0.5);

SegMask segment_image(const Model& model, const Image& img, const std::optional<BBox>& bbox = {},
                      const PreprocessOptions& opts = {});

}  // namespace alis
