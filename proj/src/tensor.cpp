#include "alis/tensor.hpp"

#include <cmath>
#include <string>

#include "alis/error.hpp"
#include "interp_detail.hpp"

namespace alis {

namespace {

void check_shape(const Shape& s) {
    if (s.n < 1 || s.c < 1 || s.h < 1 || s.w < 1) {
        throw ShapeError("tensor dimensions must be >= 1, got " + std::to_string(s.n) + "x" +
                         std::to_string(s.c) + "x" + std::to_string(s.h) + "x" +
                         std::to_string(s.w));
    }
}

// Pixel coordinates closer than this to an integer are snapped onto it, so
// that a point generated as (i + 0.5) / size reads pixel i exactly.
constexpr double kCenterSnap = 1e-9;

}  // namespace

Tensor::Tensor(Shape shape, float fill) : shape_(shape) {
    check_shape(shape_);
    data_.assign(shape_.numel(), fill);
}

Tensor::Tensor(Shape shape, std::vector<float> data) : shape_(shape), data_(std::move(data)) {
    check_shape(shape_);
    if (data_.size() != shape_.numel()) {
        throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                         " does not match shape volume " + std::to_string(shape_.numel()));
    }
}

bool all_finite(const Tensor& t) {
    for (float v : t.data()) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void PointSet::push_back(Point p) {
    points_.push_back(p);
    payload_.resize(points_.size() * payload_width_, 0.0f);
}

void PointSet::set_payload_width(std::size_t width) {
    payload_width_ = width;
    payload_.assign(points_.size() * width, 0.0f);
}

void PointSet::validate() const {
    for (std::size_t i = 0; i < points_.size(); ++i) {
        const Point& p = points_[i];
        if (!(p.y >= 0.0 && p.y <= 1.0 && p.x >= 0.0 && p.x <= 1.0)) {
            throw DomainError("point " + std::to_string(i) + " (" + std::to_string(p.y) + ", " +
                              std::to_string(p.x) + ") lies outside [0,1]^2");
        }
    }
}

double pixel_coordinate(double u, int size) {
    double p = u * size - 0.5;
    double r = std::nearbyint(p);
    if (std::abs(p - r) < kCenterSnap) p = r;
    if (p < 0.0) p = 0.0;
    if (p > size - 1) p = size - 1;
    return p;
}

float bilinear_at(std::span<const float> plane, int h, int w, double py, double px) {
    int y0 = static_cast<int>(std::floor(py));
    int x0 = static_cast<int>(std::floor(px));
    int y1 = y0 + 1 < h ? y0 + 1 : y0;
    int x1 = x0 + 1 < w ? x0 + 1 : x0;
    float wy = static_cast<float>(py - y0);
    float wx = static_cast<float>(px - x0);
    const float* r0 = plane.data() + static_cast<std::size_t>(y0) * w;
    const float* r1 = plane.data() + static_cast<std::size_t>(y1) * w;
    float top = detail::lerp2(r0[x0], r0[x1], wx);
    float bot = detail::lerp2(r1[x0], r1[x1], wx);
    return detail::lerp2(top, bot, wy);
}

PointSet bilinear_point_sample(const Tensor& t, const PointSet& pts) {
    if (t.batch() != 1) {
        throw UnsupportedError("bilinear_point_sample requires batch == 1, got " +
                               std::to_string(t.batch()));
    }
    pts.validate();
    const int C = t.channels();
    const int H = t.height();
    const int W = t.width();
    PointSet out(pts.points());
    out.set_payload_width(static_cast<std::size_t>(C));
    const auto count = static_cast<std::ptrdiff_t>(pts.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
        const Point& p = pts[static_cast<std::size_t>(i)];
        double py = pixel_coordinate(p.y, H);
        double px = pixel_coordinate(p.x, W);
        auto row = out.payload(static_cast<std::size_t>(i));
        for (int c = 0; c < C; ++c) row[c] = bilinear_at(t.plane(0, c), H, W, py, px);
    }
    return out;
}

Tensor resize_bilinear(const Tensor& t, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1) {
        throw DomainError("resize target must be at least 1x1, got " + std::to_string(out_h) +
                          "x" + std::to_string(out_w));
    }
    const Shape in = t.shape();
    Tensor out(Shape{in.n, in.c, out_h, out_w});
    const auto ty = detail::make_axis_taps(in.h, out_h);
    const auto tx = detail::make_axis_taps(in.w, out_w);
    const std::ptrdiff_t rows = static_cast<std::ptrdiff_t>(in.n) * in.c * out_h;
    const float* src = t.data().data();
    float* dst = out.data().data();
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t r = 0; r < rows; ++r) {
        const std::ptrdiff_t nc = r / out_h;
        const int oy = static_cast<int>(r % out_h);
        const float* plane = src + nc * static_cast<std::ptrdiff_t>(in.plane());
        const float* r0 = plane + static_cast<std::ptrdiff_t>(ty.i0[oy]) * in.w;
        const float* r1 = plane + static_cast<std::ptrdiff_t>(ty.i1[oy]) * in.w;
        const float wy = ty.frac[oy];
        float* o = dst + r * out_w;
        for (int ox = 0; ox < out_w; ++ox) {
            const int a = tx.i0[ox];
            const int b = tx.i1[ox];
            const float wx = tx.frac[ox];
            float top = detail::lerp2(r0[a], r0[b], wx);
            float bot = detail::lerp2(r1[a], r1[b], wx);
            o[ox] = detail::lerp2(top, bot, wy);
        }
    }
    return out;
}

Tensor upsample_2x(const Tensor& t) { return resize_bilinear(t, 2 * t.height(), 2 * t.width()); }

}  // namespace alis
