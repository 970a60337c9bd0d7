#pragma once

#include <string>
#include <vector>

#include "alis/layers.hpp"
#include "alis/tensor.hpp"
#include "alis/weights.hpp"

namespace alis {

enum class BlockType { plain_conv, inverted_residual };

const char* block_type_name(BlockType t);
BlockType parse_block_type(const std::string& s);

/// One row of the stage table. `out_channels` is the width before the width
/// multiplier is applied. An inverted-residual stage with expansion 1 has no
/// expand convolution (depthwise followed by projection).
struct StageSpec {
    BlockType type = BlockType::inverted_residual;
    int expansion = 1;
    int out_channels = 16;
    int kernel = 3;
    int stride = 1;
    int repeats = 1;

    bool operator==(const StageSpec&) const = default;
};

struct BackboneConfig {
    std::vector<StageSpec> stages;
    std::vector<int> emitted_strides{2, 4, 8, 16, 32};
    double width_multiplier = 1.0;
    int in_channels = 3;

    // MnasNet-B1 stage table (no squeeze-excitation).
    static BackboneConfig mnasnet_b1(double width_multiplier = 1.0);
    // The 0.25-width preset used for desk-scale runs and tests.
    static BackboneConfig tiny();

    // Throws DomainError on an invalid table or stride list.
    void validate() const;

    int stage_channels(std::size_t stage) const;
    // Channel width of each emitted level, in emission order.
    std::vector<int> level_channels() const;
    int max_stride() const { return emitted_strides.back(); }

    bool operator==(const BackboneConfig&) const = default;
};

// Rounds a scaled width to a multiple of `divisor` (at least `divisor`),
// bumping up once more if rounding lost more than 10%.
int round_channels(double width, int divisor = 8);

// Every convolution the config demands, in execution order.
std::vector<ConvSpec> backbone_conv_specs(const BackboneConfig& cfg);

/// Executable feature extractor. Immutable after build; forward is pure.
class Backbone {
public:
    struct Block {
        BlockType type = BlockType::plain_conv;
        std::vector<ConvLayer> convs;  // plain: {conv}; IR: {[expand], dw, project}
        bool residual = false;
    };

    const BackboneConfig& config() const { return cfg_; }
    const std::vector<Block>& blocks() const { return blocks_; }

    /// Input must be 1x3xHxW with H, W divisible by the largest emitted
    /// stride. Returns one tensor per emitted stride.
    std::vector<Tensor> forward(const Tensor& img, ActivationRecorder* rec = nullptr) const;

    std::size_t parameter_count() const;

private:
    friend Backbone build_backbone(const BackboneConfig& cfg, const WeightMap& weights);

    BackboneConfig cfg_;
    std::vector<Block> blocks_;
    std::vector<std::size_t> emit_after_;  // block index whose output is a level
};

Backbone build_backbone(const BackboneConfig& cfg, const WeightMap& weights);

}  // namespace alis
