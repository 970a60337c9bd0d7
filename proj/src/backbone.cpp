#include "alis/backbone.hpp"

#include <algorithm>
#include <cmath>

#include "alis/error.hpp"

namespace alis {

const char* block_type_name(BlockType t) {
    return t == BlockType::plain_conv ? "plain-conv" : "inverted-residual";
}

BlockType parse_block_type(const std::string& s) {
    if (s == "plain-conv") return BlockType::plain_conv;
    if (s == "inverted-residual") return BlockType::inverted_residual;
    throw InputError("unknown block type '" + s + "'");
}

int round_channels(double width, int divisor) {
    int n = std::max(divisor, static_cast<int>(width + divisor / 2.0) / divisor * divisor);
    if (n < 0.9 * width) n += divisor;
    return n;
}

BackboneConfig BackboneConfig::mnasnet_b1(double width_multiplier) {
    using enum BlockType;
    BackboneConfig cfg;
    cfg.width_multiplier = width_multiplier;
    cfg.stages = {
        {plain_conv, 1, 32, 3, 2, 1},
        {inverted_residual, 1, 16, 3, 1, 1},
        {inverted_residual, 3, 24, 3, 2, 3},
        {inverted_residual, 3, 40, 5, 2, 3},
        {inverted_residual, 6, 80, 5, 2, 3},
        {inverted_residual, 6, 96, 3, 1, 2},
        {inverted_residual, 6, 192, 5, 2, 4},
        {inverted_residual, 6, 320, 3, 1, 1},
    };
    return cfg;
}

BackboneConfig BackboneConfig::tiny() { return mnasnet_b1(0.25); }

void BackboneConfig::validate() const {
    if (stages.empty()) throw DomainError("backbone needs at least one stage");
    if (!(width_multiplier > 0.0) || !std::isfinite(width_multiplier)) {
        throw DomainError("width multiplier must be positive");
    }
    if (in_channels < 1) throw DomainError("backbone input channels must be >= 1");
    if (emitted_strides.size() != 5) {
        throw DomainError("backbone must emit exactly 5 levels, got " +
                          std::to_string(emitted_strides.size()));
    }
    for (std::size_t i = 0; i < emitted_strides.size(); ++i) {
        const int s = emitted_strides[i];
        if (s < 1 || (s & (s - 1)) != 0) {
            throw DomainError("emitted stride " + std::to_string(s) + " is not a power of two");
        }
        if (i > 0 && s <= emitted_strides[i - 1]) {
            throw DomainError("emitted strides must be strictly increasing");
        }
    }
    std::vector<int> reached;
    int stride = 1;
    for (std::size_t i = 0; i < stages.size(); ++i) {
        const StageSpec& st = stages[i];
        if (st.kernel != 3 && st.kernel != 5) {
            throw DomainError("stage " + std::to_string(i) + " kernel must be 3 or 5");
        }
        if (st.stride != 1 && st.stride != 2) {
            throw DomainError("stage " + std::to_string(i) + " stride must be 1 or 2");
        }
        if (st.repeats < 1 || st.expansion < 1 || st.out_channels < 1) {
            throw DomainError("stage " + std::to_string(i) + " has non-positive fields");
        }
        stride *= st.stride;
        reached.push_back(stride);
    }
    for (int s : emitted_strides) {
        if (std::find(reached.begin(), reached.end(), s) == reached.end()) {
            throw DomainError("no stage ends at emitted stride " + std::to_string(s));
        }
    }
    if (stride != emitted_strides.back()) {
        throw DomainError("final stage stride " + std::to_string(stride) +
                          " differs from the last emitted stride");
    }
}

int BackboneConfig::stage_channels(std::size_t stage) const {
    return round_channels(stages.at(stage).out_channels * width_multiplier);
}

std::vector<int> BackboneConfig::level_channels() const {
    std::vector<int> out;
    int stride = 1;
    std::vector<int> stage_stride;
    for (const auto& st : stages) stage_stride.push_back(stride *= st.stride);
    for (int s : emitted_strides) {
        for (std::size_t i = stages.size(); i-- > 0;) {
            if (stage_stride[i] == s) {
                out.push_back(stage_channels(i));
                break;
            }
        }
    }
    return out;
}

std::vector<ConvSpec> backbone_conv_specs(const BackboneConfig& cfg) {
    cfg.validate();
    std::vector<ConvSpec> specs;
    int in = cfg.in_channels;
    for (std::size_t si = 0; si < cfg.stages.size(); ++si) {
        const StageSpec& st = cfg.stages[si];
        const int out = cfg.stage_channels(si);
        for (int b = 0; b < st.repeats; ++b) {
            const std::string prefix =
                "backbone.s" + std::to_string(si) + ".b" + std::to_string(b) + ".";
            const int stride = b == 0 ? st.stride : 1;
            const int pad = st.kernel / 2;
            if (st.type == BlockType::plain_conv) {
                specs.push_back({prefix + "conv", out, in, st.kernel, stride, pad, 1, true});
            } else {
                const int hidden = in * st.expansion;
                if (st.expansion != 1) {
                    specs.push_back({prefix + "expand", hidden, in, 1, 1, 0, 1, true});
                }
                specs.push_back({prefix + "dw", hidden, hidden, st.kernel, stride, pad, hidden, true});
                specs.push_back({prefix + "project", out, hidden, 1, 1, 0, 1, false});
            }
            in = out;
        }
    }
    return specs;
}

Backbone build_backbone(const BackboneConfig& cfg, const WeightMap& weights) {
    cfg.validate();
    Backbone bb;
    bb.cfg_ = cfg;
    const auto specs = backbone_conv_specs(cfg);
    std::size_t next = 0;
    int in = cfg.in_channels;
    int stride = 1;
    std::vector<int> block_stride;
    for (std::size_t si = 0; si < cfg.stages.size(); ++si) {
        const StageSpec& st = cfg.stages[si];
        const int out = cfg.stage_channels(si);
        for (int b = 0; b < st.repeats; ++b) {
            Backbone::Block block;
            block.type = st.type;
            const int s = b == 0 ? st.stride : 1;
            const std::size_t n_convs =
                st.type == BlockType::plain_conv ? 1 : (st.expansion != 1 ? 3 : 2);
            for (std::size_t k = 0; k < n_convs; ++k) block.convs.push_back(load_conv(weights, specs[next++]));
            // Residual only where the block keeps both resolution and width.
            block.residual = st.type == BlockType::inverted_residual && s == 1 && in == out;
            bb.blocks_.push_back(std::move(block));
            stride *= s;
            block_stride.push_back(stride);
            in = out;
        }
    }
    for (int s : cfg.emitted_strides) {
        for (std::size_t i = block_stride.size(); i-- > 0;) {
            if (block_stride[i] == s) {
                bb.emit_after_.push_back(i);
                break;
            }
        }
    }
    return bb;
}

std::vector<Tensor> Backbone::forward(const Tensor& img, ActivationRecorder* rec) const {
    const int m = cfg_.max_stride();
    if (img.channels() != cfg_.in_channels) {
        throw ShapeError("backbone expects " + std::to_string(cfg_.in_channels) +
                         " input channels, got " + std::to_string(img.channels()));
    }
    if (img.height() % m != 0 || img.width() % m != 0) {
        throw ShapeError("backbone input " + std::to_string(img.height()) + "x" +
                         std::to_string(img.width()) + " is not divisible by stride " +
                         std::to_string(m));
    }
    std::vector<Tensor> levels;
    levels.reserve(emit_after_.size());
    Tensor x = img;
    std::size_t emit = 0;
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
        const Block& block = blocks_[i];
        Tensor y = x;
        for (const ConvLayer& conv : block.convs) y = conv.forward(y, rec);
        x = block.residual ? add(y, x) : std::move(y);
        while (emit < emit_after_.size() && emit_after_[emit] == i) {
            levels.push_back(x);
            ++emit;
        }
    }
    return levels;
}

std::size_t Backbone::parameter_count() const {
    std::size_t n = 0;
    for (const auto& b : blocks_) {
        for (const auto& c : b.convs) n += c.weights().kernel.size() + c.weights().bias.size();
    }
    return n;
}

}  // namespace alis
