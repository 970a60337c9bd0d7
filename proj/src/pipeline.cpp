#include "alis/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "alis/error.hpp"

namespace alis {

void BBox::validate() const {
    if (!std::isfinite(x0) || !std::isfinite(y0) || !std::isfinite(x1) || !std::isfinite(y1)) {
        throw DomainError("bounding box coordinates must be finite");
    }
    if (!(x0 < x1) || !(y0 < y1)) throw DomainError("bounding box is degenerate");
}

BBox enlarge_bbox(const BBox& b, int img_w, int img_h) {
    b.validate();
    const double mx = 0.1 * b.width();
    const double my = 0.1 * b.height();
    BBox e{std::clamp(b.x0 - mx, 0.0, static_cast<double>(img_w)),
           std::clamp(b.y0 - my, 0.0, static_cast<double>(img_h)),
           std::clamp(b.x1 + mx, 0.0, static_cast<double>(img_w)),
           std::clamp(b.y1 + my, 0.0, static_cast<double>(img_h))};
    if (!(e.x0 < e.x1) || !(e.y0 < e.y1)) {
        throw DomainError("bounding box is degenerate after clamping to the image");
    }
    return e;
}

std::array<double, 2> ResizeRecord::to_network(double sx, double sy) const {
    return {(sx - crop_x0) * resized_w / crop_w, (sy - crop_y0) * resized_h / crop_h};
}

std::array<double, 2> ResizeRecord::to_source(double nx, double ny) const {
    return {crop_x0 + nx * crop_w / resized_w, crop_y0 + ny * crop_h / resized_h};
}

Preprocessed preprocess(const Image& img, const std::optional<BBox>& bbox, const Normalization& norm,
                        const PreprocessOptions& opts) {
    if (img.empty() || img.rgb.size() != static_cast<std::size_t>(img.width) * img.height * 3) {
        throw InputError("image is empty or malformed");
    }
    if (opts.target_height < 1 || opts.pad_multiple < 1) {
        throw DomainError("target height and pad multiple must be positive");
    }
    ResizeRecord rec;
    rec.source_w = img.width;
    rec.source_h = img.height;
    int x0 = 0, y0 = 0, x1 = img.width, y1 = img.height;
    if (bbox) {
        const BBox e = enlarge_bbox(*bbox, img.width, img.height);
        x0 = static_cast<int>(std::floor(e.x0));
        y0 = static_cast<int>(std::floor(e.y0));
        x1 = std::min(img.width, static_cast<int>(std::ceil(e.x1)));
        y1 = std::min(img.height, static_cast<int>(std::ceil(e.y1)));
    }
    rec.crop_x0 = x0;
    rec.crop_y0 = y0;
    rec.crop_w = x1 - x0;
    rec.crop_h = y1 - y0;
    rec.resized_h = opts.target_height;
    rec.resized_w = std::max(
        1, static_cast<int>(std::lround(static_cast<double>(rec.crop_w) * opts.target_height / rec.crop_h)));
    const int m = opts.pad_multiple;
    rec.padded_h = (rec.resized_h + m - 1) / m * m;
    rec.padded_w = (rec.resized_w + m - 1) / m * m;

    Tensor crop(Shape{1, 3, rec.crop_h, rec.crop_w});
    for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < rec.crop_h; ++y) {
            for (int x = 0; x < rec.crop_w; ++x) {
                crop.at(0, c, y, x) = static_cast<float>(img.at(x0 + x, y0 + y, c) / 255.0);
            }
        }
    }
    const Tensor resized = resize_bilinear(crop, rec.resized_h, rec.resized_w);
    Tensor input(Shape{1, 3, rec.padded_h, rec.padded_w});
    for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < rec.resized_h; ++y) {
            for (int x = 0; x < rec.resized_w; ++x) {
                input.at(0, c, y, x) =
                    static_cast<float>((resized.at(0, c, y, x) - norm.mean[c]) / norm.std[c]);
            }
        }
    }
    return {std::move(input), rec};
}

SegMask postprocess(const LogitMap& logits, const ResizeRecord& rec, double threshold) {
    const Tensor& t = logits.logits;
    if (t.batch() != 1 || t.channels() != 2 || t.height() != rec.padded_h || t.width() != rec.padded_w) {
        throw ShapeError("logits do not match the padded network resolution");
    }
    Tensor prob(Shape{1, 1, rec.resized_h, rec.resized_w});
    for (int y = 0; y < rec.resized_h; ++y) {
        for (int x = 0; x < rec.resized_w; ++x) {
            prob.at(0, 0, y, x) =
                static_cast<float>(softmax2({t.at(0, 0, y, x), t.at(0, 1, y, x)})[1]);
        }
    }
    const Tensor back = resize_bilinear(prob, rec.crop_h, rec.crop_w);
    SegMask mask(rec.source_w, rec.source_h);
    for (int y = 0; y < rec.crop_h; ++y) {
        for (int x = 0; x < rec.crop_w; ++x) {
            mask.at(rec.crop_x0 + x, rec.crop_y0 + y) = back.at(0, 0, y, x) > threshold ? 1 : 0;
        }
    }
    return mask;
}

SegMask segment_image(const Model& model, const Image& img, const std::optional<BBox>& bbox,
                      const PreprocessOptions& opts) {
    const Preprocessed pre = preprocess(img, bbox, model.normalization(), opts);
    return postprocess(model.forward(pre.input), pre.record);
}

}  // namespace alis
