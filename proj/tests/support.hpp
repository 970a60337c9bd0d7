#pragma once

// Naive scalar oracles and fixtures shared by the unit and acceptance tests.
// The oracles are written directly from the defining formulas in double
// precision and never call the library kernels they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "alis/mask.hpp"
#include "alis/model_io.hpp"
#include "alis/nn_ops.hpp"
#include "alis/quant.hpp"
#include "alis/seghead.hpp"
#include "alis/tensor.hpp"

namespace alis::testing {

using Rng = std::mt19937_64;

inline float uniform(Rng& rng, double lo, double hi) {
    return static_cast<float>(std::uniform_real_distribution<double>(lo, hi)(rng));
}

inline int uniform_int(Rng& rng, int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline Tensor random_tensor(Shape s, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t(s);
    for (float& v : t.data()) v = uniform(rng, lo, hi);
    return t;
}

inline ConvWeights random_conv(Rng& rng, int out, int in, int k, int stride, int pad, int groups,
                               double scale = 1.0) {
    ConvWeights w;
    w.out_channels = out;
    w.in_per_group = in / groups;
    w.kernel_h = w.kernel_w = k;
    w.stride = stride;
    w.padding = pad;
    w.groups = groups;
    w.kernel.resize(static_cast<std::size_t>(out) * w.in_per_group * k * k);
    for (float& v : w.kernel) v = uniform(rng, -scale, scale);
    w.bias.resize(out);
    for (float& v : w.bias) v = uniform(rng, -scale, scale);
    return w;
}

// Direct six-loop cross-correlation with zero padding, double accumulation.
inline Tensor naive_conv(const Tensor& t, const ConvWeights& w) {
    const int oh = (t.height() + 2 * w.padding - w.kernel_h) / w.stride + 1;
    const int ow = (t.width() + 2 * w.padding - w.kernel_w) / w.stride + 1;
    const int out_per_group = w.out_channels / w.groups;
    Tensor out(Shape{t.batch(), w.out_channels, oh, ow});
    for (int n = 0; n < t.batch(); ++n) {
        for (int oc = 0; oc < w.out_channels; ++oc) {
            const int g = oc / out_per_group;
            for (int y = 0; y < oh; ++y) {
                for (int x = 0; x < ow; ++x) {
                    double acc = w.bias[oc];
                    for (int ic = 0; ic < w.in_per_group; ++ic) {
                        for (int ky = 0; ky < w.kernel_h; ++ky) {
                            for (int kx = 0; kx < w.kernel_w; ++kx) {
                                const int iy = y * w.stride - w.padding + ky;
                                const int ix = x * w.stride - w.padding + kx;
                                if (iy < 0 || ix < 0 || iy >= t.height() || ix >= t.width()) continue;
                                const std::size_t ki =
                                    ((static_cast<std::size_t>(oc) * w.in_per_group + ic) * w.kernel_h + ky) *
                                        w.kernel_w + kx;
                                acc += static_cast<double>(w.kernel[ki]) *
                                       t.at(n, g * w.in_per_group + ic, iy, ix);
                            }
                        }
                    }
                    out.at(n, oc, y, x) = static_cast<float>(acc);
                }
            }
        }
    }
    return out;
}

// Continuous source coordinate for pixel-centre sampling, clamped.
inline double naive_source_coord(double u, int size) {
    double p = u * size - 0.5;
    if (p < 0.0) p = 0.0;
    if (p > size - 1) p = size - 1;
    return p;
}

inline double naive_bilinear(const Tensor& t, int c, double py, double px) {
    const int y0 = static_cast<int>(std::floor(py));
    const int x0 = static_cast<int>(std::floor(px));
    const int y1 = std::min(y0 + 1, t.height() - 1);
    const int x1 = std::min(x0 + 1, t.width() - 1);
    const double fy = py - y0;
    const double fx = px - x0;
    const double top = t.at(0, c, y0, x0) * (1.0 - fx) + t.at(0, c, y0, x1) * fx;
    const double bot = t.at(0, c, y1, x0) * (1.0 - fx) + t.at(0, c, y1, x1) * fx;
    return top * (1.0 - fy) + bot * fy;
}

inline double naive_point_sample(const Tensor& t, int c, double uy, double ux) {
    return naive_bilinear(t, c, naive_source_coord(uy, t.height()), naive_source_coord(ux, t.width()));
}

inline Tensor naive_resize(const Tensor& t, int oh, int ow) {
    Tensor out(Shape{t.batch(), t.channels(), oh, ow});
    for (int c = 0; c < t.channels(); ++c) {
        for (int y = 0; y < oh; ++y) {
            for (int x = 0; x < ow; ++x) {
                const double uy = (y + 0.5) / oh;
                const double ux = (x + 0.5) / ow;
                out.at(0, c, y, x) = static_cast<float>(naive_point_sample(t, c, uy, ux));
            }
        }
    }
    return out;
}

inline std::vector<double> naive_linear(const std::vector<float>& x, const LinearWeights& w) {
    std::vector<double> y(w.out_features);
    for (int o = 0; o < w.out_features; ++o) {
        double acc = w.bias[o];
        for (int i = 0; i < w.in_features; ++i) {
            acc += static_cast<double>(w.weight[static_cast<std::size_t>(o) * w.in_features + i]) * x[i];
        }
        y[o] = acc;
    }
    return y;
}

// -log softmax probability of `label`, straight from the definition.
inline double naive_ce(double l0, double l1, int label) {
    const double p1 = std::exp(l1) / (std::exp(l0) + std::exp(l1));
    return -std::log(label == 1 ? p1 : 1.0 - p1);
}

inline double naive_iou(const SegMask& a, const SegMask& b) {
    std::size_t inter = 0, na = 0, nb = 0;
    for (int y = 0; y < a.height; ++y) {
        for (int x = 0; x < a.width; ++x) {
            const bool pa = a.at(x, y) == 1;
            const bool pb = b.at(x, y) == 1;
            na += pa;
            nb += pb;
            inter += pa && pb;
        }
    }
    const std::size_t uni = na + nb - inter;
    return uni == 0 ? 100.0 : 100.0 * static_cast<double>(inter) / static_cast<double>(uni);
}

inline SegMask random_mask(Rng& rng, int w, int h, double p = 0.5) {
    SegMask m(w, h);
    std::bernoulli_distribution d(p);
    for (auto& v : m.data) v = d(rng) ? 1 : 0;
    return m;
}

// Every cell's (score, row-major index), fully sorted: score descending,
// index ascending.
inline std::vector<std::pair<int, int>> brute_force_top(const Tensor& logits, int n) {
    std::vector<std::pair<float, int>> all;
    const int h = logits.height(), w = logits.width();
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const float s = -std::fabs(logits.at(0, 1, y, x) - logits.at(0, 0, y, x));
            all.emplace_back(s, y * w + x);
        }
    }
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    std::vector<std::pair<int, int>> out;
    for (int i = 0; i < std::min<int>(n, static_cast<int>(all.size())); ++i) {
        out.emplace_back(all[i].second / w, all[i].second % w);
    }
    return out;
}

// Point MLP that passes the two coarse logits straight through and ignores
// the fine features: hidden = (relu(l0), relu(-l0), relu(l1), relu(-l1), 0...),
// output = (h0 - h1, h2 - h3).
inline std::vector<LinearWeights> identity_mlp(int fine_ch, const std::vector<int>& hidden) {
    std::vector<LinearWeights> layers;
    int in = fine_ch + 2;
    for (std::size_t j = 0; j < hidden.size(); ++j) {
        LinearWeights lw;
        lw.in_features = in;
        lw.out_features = hidden[j];
        lw.weight.assign(static_cast<std::size_t>(hidden[j]) * in, 0.0f);
        lw.bias.assign(hidden[j], 0.0f);
        auto set = [&](int o, int i, float v) { lw.weight[static_cast<std::size_t>(o) * in + i] = v; };
        if (j == 0) {
            set(0, fine_ch, 1.0f);
            set(1, fine_ch, -1.0f);
            set(2, fine_ch + 1, 1.0f);
            set(3, fine_ch + 1, -1.0f);
        } else {
            for (int k = 0; k < 4; ++k) set(k, k, 1.0f);
        }
        layers.push_back(std::move(lw));
        in = hidden[j];
    }
    LinearWeights out;
    out.in_features = in;
    out.out_features = 2;
    out.weight.assign(2 * static_cast<std::size_t>(in), 0.0f);
    out.bias.assign(2, 0.0f);
    out.weight[0] = 1.0f;
    out.weight[1] = -1.0f;
    out.weight[static_cast<std::size_t>(in) + 2] = 1.0f;
    out.weight[static_cast<std::size_t>(in) + 3] = -1.0f;
    layers.push_back(std::move(out));
    return layers;
}

// Replaces the point MLP tensors of a float bundle with identity_mlp.
inline void install_identity_mlp(ModelBundle& m) {
    const auto specs = head_linear_specs(m.head, m.backbone);
    const int fine_ch = specs.front().in_features - 2;
    const auto layers = identity_mlp(fine_ch, m.head.pointrend.mlp_hidden);
    for (std::size_t j = 0; j < specs.size(); ++j) {
        m.tensors[specs[j].name + ".weight"] =
            StoredTensor::from_f32({layers[j].out_features, layers[j].in_features}, layers[j].weight);
        m.tensors[specs[j].name + ".bias"] = StoredTensor::from_f32({layers[j].out_features}, layers[j].bias);
    }
}

inline SegMask argmax_mask(const Tensor& logits) {
    SegMask m(logits.width(), logits.height());
    for (int y = 0; y < logits.height(); ++y) {
        for (int x = 0; x < logits.width(); ++x) {
            m.at(x, y) = logits.at(0, 1, y, x) > logits.at(0, 0, y, x) ? 1 : 0;
        }
    }
    return m;
}

// One random calibrated conv layer run through the int8 path. Returns the
// fraction of outputs whose dequantized value lies within 2 * scale_out of
// the float result.
inline double quantized_conv_agreement(Rng& rng) {
    const int in = uniform_int(rng, 1, 8);
    const bool depthwise = uniform_int(rng, 0, 2) == 0;
    const int out = depthwise ? in : uniform_int(rng, 1, 8);
    const int k = uniform_int(rng, 0, 1) == 0 ? 3 : 5;
    const bool fuse_relu = uniform_int(rng, 0, 1) == 1;
    const Tensor x = random_tensor(Shape{1, in, uniform_int(rng, 6, 14), uniform_int(rng, 6, 14)}, rng,
                                   uniform(rng, -2.0, 0.0), uniform(rng, 0.1, 2.0));
    const ConvWeights w = random_conv(rng, out, in, k, uniform_int(rng, 1, 2), k / 2, depthwise ? in : 1,
                                      1.0 / std::sqrt(static_cast<double>(in / (depthwise ? in : 1) * k * k)));
    Tensor y = naive_conv(x, w);
    if (fuse_relu) {
        for (float& v : y.data()) v = std::max(v, 0.0f);
    }
    const QuantParams in_qp = compute_qparams(observe({}, x));
    const QuantParams out_qp = compute_qparams(observe({}, y));
    const QuantConvWeights qw = quantize_conv_weights(w, in_qp);
    const Tensor d = dequantize(qconv2d(quantize(x, in_qp), qw, out_qp, fuse_relu));
    std::size_t ok = 0;
    for (std::size_t i = 0; i < y.numel(); ++i) {
        ok += std::fabs(static_cast<double>(d.data()[i]) - y.data()[i]) <= 2.0 * out_qp.scale;
    }
    return static_cast<double>(ok) / static_cast<double>(y.numel());
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("alis_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace alis::testing
