#include "alis/config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <string>

#include "alis/error.hpp"

namespace alis {

using nlohmann::json;

namespace {

void require_object(const json& j, const std::string& what,
                    std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw InputError(what + " must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw InputError("unknown key '" + key + "' in " + what);
    }
}

int get_int(const json& j, const char* key, const std::string& what) {
    const json& v = j.at(key);
    if (!v.is_number_integer()) {
        throw InputError(what + "." + key + " must be an integer");
    }
    return v.get<int>();
}

double get_number(const json& j, const char* key, const std::string& what) {
    const json& v = j.at(key);
    if (!v.is_number()) throw InputError(what + "." + key + " must be a number");
    return v.get<double>();
}

std::vector<int> get_int_list(const json& j, const char* key, const std::string& what) {
    const json& v = j.at(key);
    if (!v.is_array()) throw InputError(what + "." + key + " must be an array");
    std::vector<int> out;
    for (const json& e : v) {
        if (!e.is_number_integer()) throw InputError(what + "." + key + " must hold integers");
        out.push_back(e.get<int>());
    }
    return out;
}

std::array<double, 3> get_triple(const json& j, const char* key, const std::string& what) {
    const json& v = j.at(key);
    if (!v.is_array() || v.size() != 3) {
        throw InputError(what + "." + key + " must be an array of 3 numbers");
    }
    std::array<double, 3> out{};
    for (std::size_t i = 0; i < 3; ++i) {
        if (!v[i].is_number()) throw InputError(what + "." + key + " must hold numbers");
        out[i] = v[i].get<double>();
    }
    return out;
}

}  // namespace

void Normalization::validate() const {
    for (std::size_t i = 0; i < 3; ++i) {
        if (!std::isfinite(mean[i]) || !(std[i] > 0.0) || !std::isfinite(std[i])) {
            throw DomainError("normalization needs finite means and positive stds");
        }
    }
}

json to_json(const BackboneConfig& cfg) {
    json stages = json::array();
    for (const StageSpec& s : cfg.stages) {
        stages.push_back({{"type", block_type_name(s.type)},
                          {"expansion", s.expansion},
                          {"out_channels", s.out_channels},
                          {"kernel", s.kernel},
                          {"stride", s.stride},
                          {"repeats", s.repeats}});
    }
    return {{"stages", stages},
            {"emitted_strides", cfg.emitted_strides},
            {"width_multiplier", cfg.width_multiplier},
            {"in_channels", cfg.in_channels}};
}

json to_json(const HeadConfig& cfg) {
    const PointRendConfig& p = cfg.pointrend;
    return {{"coarse_channels", cfg.coarse_channels},
            {"aggregation_stride", cfg.aggregation_stride},
            {"num_classes", cfg.num_classes},
            {"fine_stride", cfg.fine_stride},
            {"pointrend",
             {{"points", p.points},
              {"steps", p.steps},
              {"mlp_hidden", p.mlp_hidden},
              {"oversample", p.oversample},
              {"importance", p.importance}}}};
}

json to_json(const Normalization& n) { return {{"mean", n.mean}, {"std", n.std}}; }

BackboneConfig backbone_from_json(const json& j) {
    const std::string what = "backbone";
    require_object(j, what,
                   {"preset", "stages", "emitted_strides", "width_multiplier", "in_channels"});
    if (j.contains("preset") && j.contains("stages")) {
        throw InputError("backbone takes either 'preset' or 'stages', not both");
    }
    BackboneConfig cfg;
    if (j.contains("stages")) {
        const json& arr = j.at("stages");
        if (!arr.is_array()) throw InputError("backbone.stages must be an array");
        for (const json& s : arr) {
            const std::string sw = "backbone.stages[]";
            require_object(s, sw, {"type", "expansion", "out_channels", "kernel", "stride", "repeats"});
            StageSpec st;
            if (!s.at("type").is_string()) throw InputError(sw + ".type must be a string");
            st.type = parse_block_type(s.at("type").get<std::string>());
            st.expansion = get_int(s, "expansion", sw);
            st.out_channels = get_int(s, "out_channels", sw);
            st.kernel = get_int(s, "kernel", sw);
            st.stride = get_int(s, "stride", sw);
            st.repeats = get_int(s, "repeats", sw);
            cfg.stages.push_back(st);
        }
    } else {
        const std::string preset =
            j.contains("preset") && j.at("preset").is_string() ? j.at("preset").get<std::string>()
                                                                : "mnasnet_b1";
        if (preset == "tiny") {
            cfg = BackboneConfig::tiny();
        } else if (preset == "mnasnet_b1") {
            cfg = BackboneConfig::mnasnet_b1();
        } else {
            throw InputError("unknown backbone preset '" + preset + "'");
        }
    }
    if (j.contains("width_multiplier")) {
        cfg.width_multiplier = get_number(j, "width_multiplier", what);
    }
    if (j.contains("emitted_strides")) cfg.emitted_strides = get_int_list(j, "emitted_strides", what);
    if (j.contains("in_channels")) cfg.in_channels = get_int(j, "in_channels", what);
    try {
        cfg.validate();
    } catch (const DomainError& e) {
        throw InputError(std::string("invalid backbone config: ") + e.what());
    }
    return cfg;
}

HeadConfig head_from_json(const json& j) {
    const std::string what = "head";
    require_object(j, what,
                   {"coarse_channels", "aggregation_stride", "num_classes", "fine_stride", "pointrend"});
    HeadConfig cfg;
    if (j.contains("coarse_channels")) cfg.coarse_channels = get_int(j, "coarse_channels", what);
    if (j.contains("aggregation_stride")) {
        cfg.aggregation_stride = get_int(j, "aggregation_stride", what);
    }
    if (j.contains("num_classes")) cfg.num_classes = get_int(j, "num_classes", what);
    if (j.contains("fine_stride")) cfg.fine_stride = get_int(j, "fine_stride", what);
    if (j.contains("pointrend")) {
        const json& p = j.at("pointrend");
        const std::string pw = "head.pointrend";
        require_object(p, pw, {"points", "steps", "mlp_hidden", "oversample", "importance"});
        PointRendConfig& pr = cfg.pointrend;
        if (p.contains("points")) pr.points = get_int(p, "points", pw);
        if (p.contains("steps")) pr.steps = get_int(p, "steps", pw);
        if (p.contains("mlp_hidden")) pr.mlp_hidden = get_int_list(p, "mlp_hidden", pw);
        if (p.contains("oversample")) pr.oversample = get_int(p, "oversample", pw);
        if (p.contains("importance")) pr.importance = get_number(p, "importance", pw);
    }
    return cfg;
}

Normalization normalization_from_json(const json& j) {
    require_object(j, "normalization", {"mean", "std"});
    Normalization n;
    if (j.contains("mean")) n.mean = get_triple(j, "mean", "normalization");
    if (j.contains("std")) n.std = get_triple(j, "std", "normalization");
    try {
        n.validate();
    } catch (const DomainError& e) {
        throw InputError(e.what());
    }
    return n;
}

ModelConfig model_config_from_json(const json& j) {
    require_object(j, "model config", {"backbone", "head", "normalization"});
    if (!j.contains("backbone")) throw InputError("model config lacks 'backbone'");
    ModelConfig mc;
    mc.backbone = backbone_from_json(j.at("backbone"));
    if (j.contains("head")) mc.head = head_from_json(j.at("head"));
    if (j.contains("normalization")) mc.normalization = normalization_from_json(j.at("normalization"));
    try {
        mc.head.validate(mc.backbone);
    } catch (const DomainError& e) {
        throw InputError(std::string("invalid head config: ") + e.what());
    }
    return mc;
}

ModelConfig load_model_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config '" + path.string() + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw InputError("config '" + path.string() + "' is not valid JSON: " + e.what());
    }
    try {
        return model_config_from_json(j);
    } catch (const json::exception& e) {
        throw InputError("config '" + path.string() + "': " + e.what());
    }
}

}  // namespace alis
