#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace alis {

// Batch-channel-height-width extents of a dense feature map.
struct Shape {
    int n = 1;
    int c = 1;
    int h = 1;
    int w = 1;

    std::size_t numel() const {
        return static_cast<std::size_t>(n) * c * h * w;
    }
    std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
    bool operator==(const Shape&) const = default;
};

/// Dense float32 NCHW tensor, stored row-major (batch, channel, row, column).
///
/// Every dimension is at least 1 and the buffer length always equals
/// n*c*h*w. Operations in this library treat tensors as values: they never
/// mutate their inputs and return freshly allocated results.
class Tensor {
public:
    Tensor() : Tensor(Shape{}) {}
    explicit Tensor(Shape shape, float fill = 0.0f);
    Tensor(Shape shape, std::vector<float> data);

    const Shape& shape() const { return shape_; }
    int batch() const { return shape_.n; }
    int channels() const { return shape_.c; }
    int height() const { return shape_.h; }
    int width() const { return shape_.w; }
    std::size_t numel() const { return data_.size(); }

    std::span<const float> data() const { return data_; }
    std::span<float> data() { return data_; }

    std::span<const float> plane(int n, int c) const {
        return {data_.data() + offset(n, c, 0, 0), shape_.plane()};
    }
    std::span<float> plane(int n, int c) {
        return {data_.data() + offset(n, c, 0, 0), shape_.plane()};
    }

    float at(int n, int c, int y, int x) const { return data_[offset(n, c, y, x)]; }
    float& at(int n, int c, int y, int x) { return data_[offset(n, c, y, x)]; }

    std::size_t offset(int n, int c, int y, int x) const {
        return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + y) * shape_.w + x;
    }

    bool operator==(const Tensor&) const = default;

private:
    Shape shape_;
    std::vector<float> data_;
};

bool all_finite(const Tensor& t);

// A continuous sample location in normalized image space: (0,0) is the
// top-left image corner and (1,1) the bottom-right one.
struct Point {
    double y = 0.0;
    double x = 0.0;
    bool operator==(const Point&) const = default;
};

/// Sample locations plus an optional fixed-width float payload per point
/// (sampled features, logits). Payload rows are stored contiguously.
class PointSet {
public:
    PointSet() = default;
    explicit PointSet(std::vector<Point> points) : points_(std::move(points)) {}

    std::size_t size() const { return points_.size(); }
    bool empty() const { return points_.empty(); }
    const std::vector<Point>& points() const { return points_; }
    const Point& operator[](std::size_t i) const { return points_[i]; }
    void push_back(Point p);

    std::size_t payload_width() const { return payload_width_; }
    bool has_payload() const { return payload_width_ > 0; }
    std::span<const float> payload(std::size_t i) const {
        return {payload_.data() + i * payload_width_, payload_width_};
    }
    std::span<float> payload(std::size_t i) {
        return {payload_.data() + i * payload_width_, payload_width_};
    }
    // Resizes the payload to `width` floats per point (zero filled).
    void set_payload_width(std::size_t width);

    // Throws DomainError when a coordinate leaves [0,1].
    void validate() const;

private:
    std::vector<Point> points_;
    std::size_t payload_width_ = 0;
    std::vector<float> payload_;
};

// Half-pixel-center convention: normalized coordinate u lands on continuous
// pixel coordinate u*size - 0.5, clamped to the outermost pixel centers.
double pixel_coordinate(double u, int size);

/// Samples every channel of `t` (batch must be 1) at each point with
/// bilinear interpolation. Returns the points with payload width ==
/// t.channels().
PointSet bilinear_point_sample(const Tensor& t, const PointSet& pts);

// Bilinear value of one channel plane at continuous pixel coordinates
// (already clamped to the valid range).
float bilinear_at(std::span<const float> plane, int h, int w, double py, double px);

/// Bilinear resampling to (out_h, out_w), half-pixel centers, edge clamp.
Tensor resize_bilinear(const Tensor& t, int out_h, int out_w);

Tensor upsample_2x(const Tensor& t);

namespace ref {
// Serial reference path kept for tests and benchmarks; bit-identical to the
// parallel kernels above.
Tensor resize_bilinear(const Tensor& t, int out_h, int out_w);
}  // namespace ref

}  // namespace alis
