#pragma once

#include <array>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "alis/backbone.hpp"
#include "alis/seghead.hpp"

namespace alis {

struct Normalization {
    std::array<double, 3> mean{0.485, 0.456, 0.406};
    std::array<double, 3> std{0.229, 0.224, 0.225};

    void validate() const;
    bool operator==(const Normalization&) const = default;
};

// JSON forms used both in model headers and in the CLI config files.
// Parsers reject unknown keys and wrong types with InputError.
nlohmann::json to_json(const BackboneConfig& cfg);
nlohmann::json to_json(const HeadConfig& cfg);
nlohmann::json to_json(const Normalization& n);

// A backbone object either lists "stages" explicitly or names a "preset"
// ("mnasnet_b1" or "tiny") with an optional "width_multiplier".
BackboneConfig backbone_from_json(const nlohmann::json& j);
HeadConfig head_from_json(const nlohmann::json& j);
Normalization normalization_from_json(const nlohmann::json& j);

struct ModelConfig {
    BackboneConfig backbone;
    HeadConfig head;
    Normalization normalization;
};

// {"backbone": {...}, "head": {...}?, "normalization": {...}?}
ModelConfig model_config_from_json(const nlohmann::json& j);
ModelConfig load_model_config(const std::filesystem::path& path);

}  // namespace alis
