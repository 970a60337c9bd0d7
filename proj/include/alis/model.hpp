#pragma once

#include <vector>

#include "alis/backbone.hpp"
#include "alis/config.hpp"
#include "alis/layers.hpp"
#include "alis/model_io.hpp"
#include "alis/seghead.hpp"

namespace alis {

/// Executable network built from a bundle: backbone, aggregation, coarse
/// logits and point refinement. Immutable; forward is safe to call from
/// several threads at once.
class Model {
public:
    explicit Model(const ModelBundle& bundle);

    struct Trace {
        std::vector<Tensor> levels;
        Tensor coarse_features;
        LogitMap coarse;
        LogitMap refined;  // stride 1, network input resolution
    };

    // `input` is a normalized 1x3xHxW tensor with H, W multiples of 32.
    Trace trace(const Tensor& input, ActivationRecorder* rec = nullptr) const;
    LogitMap forward(const Tensor& input, ActivationRecorder* rec = nullptr) const;

    const Backbone& backbone() const { return backbone_; }
    const SegHead& head() const { return head_; }
    const Normalization& normalization() const { return norm_; }
    bool quantized() const { return quantized_; }

private:
    Backbone backbone_;
    SegHead head_;
    Normalization norm_;
    bool quantized_ = false;
};

}  // namespace alis
