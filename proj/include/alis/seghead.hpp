#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "alis/backbone.hpp"
#include "alis/layers.hpp"
#include "alis/mask.hpp"
#include "alis/tensor.hpp"

namespace alis {

struct PointRendConfig {
    int points = 1024;  // points re-classified per refinement step
    int steps = 2;
    std::vector<int> mlp_hidden{64, 64};
    // Training-time point selection.
    int oversample = 3;
    double importance = 0.75;

    bool operator==(const PointRendConfig&) const = default;
};

struct HeadConfig {
    int coarse_channels = 64;
    int aggregation_stride = 4;
    int num_classes = 2;
    int fine_stride = 2;  // level whose features feed the point MLP
    PointRendConfig pointrend;

    // Throws DomainError when inconsistent with the backbone.
    void validate(const BackboneConfig& bb) const;

    bool operator==(const HeadConfig&) const = default;
};

/// Two-class logits (channel 0 background, channel 1 person) and their
/// stride relative to the network input.
struct LogitMap {
    Tensor logits;
    int stride = 1;
};

std::vector<ConvSpec> head_conv_specs(const HeadConfig& cfg, const BackboneConfig& bb);
std::vector<LinearSpec> head_linear_specs(const HeadConfig& cfg, const BackboneConfig& bb);

/// The point classifier: linear + ReLU hidden layers, linear output of two
/// logits. Its input is [fine features..., background logit, person logit].
struct PointHead {
    std::vector<LinearWeights> layers;

    int in_features() const { return layers.empty() ? 0 : layers.front().in_features; }
    std::array<float, 2> forward(std::span<const float> x) const;
};

class SegHead {
public:
    const HeadConfig& config() const { return cfg_; }
    const PointHead& point_head() const { return point_head_; }
    const std::vector<ConvLayer>& laterals() const { return laterals_; }
    const ConvLayer& coarse_conv() const { return coarse_; }

    /// Projects every level to the coarse width and sums them at the
    /// aggregation stride: coarser levels are upsampled 2x repeatedly, finer
    /// ones reduced by a strided projection. No top-down path.
    Tensor aggregate(const std::vector<Tensor>& levels, ActivationRecorder* rec = nullptr) const;

    LogitMap coarse_segment(const Tensor& coarse, ActivationRecorder* rec = nullptr) const;

    const Tensor& fine_features(const std::vector<Tensor>& levels) const;

    std::size_t parameter_count() const;

private:
    friend SegHead build_head(const HeadConfig&, const BackboneConfig&, const WeightMap&);

    HeadConfig cfg_;
    std::vector<int> level_strides_;
    std::vector<ConvLayer> laterals_;
    std::vector<int> upsamples_;
    ConvLayer coarse_;
    PointHead point_head_;
    std::size_t fine_index_ = 0;
};

SegHead build_head(const HeadConfig& cfg, const BackboneConfig& bb, const WeightMap& weights);

// -|person - background|; 0 at a tie, more negative when more confident.
float uncertainty(std::array<float, 2> logits);

/// The n most uncertain cells of the logit grid as normalized pixel centres,
/// most uncertain first; ties go to the smaller row-major index.
PointSet select_top_uncertain(const LogitMap& lm, int n);

/// Training-time selection: k*n uniform candidates, the floor(beta*n) most
/// uncertain of them, then fresh uniform points up to n. Deterministic in
/// `seed`.
PointSet sample_train_points(const LogitMap& lm, int n, int oversample, double importance,
                             std::uint64_t seed);

/// Re-classifies each point from [fine features, logits] sampled there.
/// The result carries two refined logits per point.
PointSet refine_points(const LogitMap& logits, const Tensor& fine, const PointSet& pts,
                       const PointHead& head);

/// Subdivision inference. Each step upsamples the current logits 2x,
/// re-classifies the most uncertain cells from the upsampled logits and the
/// fine features, and writes the results back into those cells. The grid is
/// then brought to the network input resolution (coarse size * stride) with
/// further 2x bilinear steps.
LogitMap pointrend_infer(const LogitMap& coarse, const Tensor& fine, const PointRendConfig& cfg,
                         const PointHead& head);

// Resizes logits to `out_h` x `out_w` via repeated 2x upsampling where the
// ratio allows, then a direct bilinear resize for any remainder.
Tensor upsample_logits_to(const Tensor& logits, int out_h, int out_w);

double cross_entropy2(std::array<float, 2> logits, int label);

/// Mean pixelwise cross-entropy; the ground truth is resized to the logit
/// grid by nearest neighbour.
double seg_loss(const LogitMap& pred, const SegMask& gt);

/// Sum of per-point cross-entropies against the nearest ground-truth pixel.
double pointrend_loss(const PointSet& refined, const SegMask& gt);

}  // namespace alis
