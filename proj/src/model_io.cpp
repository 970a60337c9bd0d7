#include "alis/model_io.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <random>
#include <set>

#include "alis/error.hpp"

namespace alis {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'A', 'L', 'S', 'N'};
constexpr std::size_t kPreamble = 16;  // magic + version + header length

std::size_t align_up(std::size_t v) { return (v + kAlignment - 1) / kAlignment * kAlignment; }

void put_le(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_le(std::span<const std::uint8_t> in, std::size_t at, int bytes) {
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(in[at + i]) << (8 * i);
    return v;
}

json qparams_json(const QuantParams& qp) {
    return {{"scale", static_cast<double>(qp.scale)}, {"zero_point", qp.zero_point}};
}

QuantParams qparams_from(const json& j, const std::string& tensor) {
    if (!j.is_object() || !j.contains("scale") || !j.contains("zero_point") ||
        !j.at("scale").is_number() || !j.at("zero_point").is_number_integer()) {
        throw FormatError("tensor '" + tensor + "' has malformed quantization parameters");
    }
    QuantParams qp{static_cast<float>(j.at("scale").get<double>()), j.at("zero_point").get<int>()};
    try {
        qp.validate();
    } catch (const Error& e) {
        throw FormatError("tensor '" + tensor + "': " + e.what());
    }
    return qp;
}

struct Layout {
    json header;
    std::vector<std::size_t> offsets;  // per tensor, name order
    std::size_t payload_span = 0;       // bytes from payload start to end of last tensor
};

Layout plan_layout(const ModelBundle& m) {
    Layout lay;
    json tensors = json::array();
    std::size_t cursor = 0;
    for (const auto& [name, t] : m.tensors) {
        cursor = align_up(cursor);
        json e = {{"name", name},
                  {"dtype", dtype_name(t.dtype)},
                  {"shape", t.shape},
                  {"offset", cursor},
                  {"nbytes", t.bytes.size()}};
        if (t.input_qparams) e["input_qparams"] = qparams_json(*t.input_qparams);
        if (t.output_qparams) e["output_qparams"] = qparams_json(*t.output_qparams);
        tensors.push_back(std::move(e));
        lay.offsets.push_back(cursor);
        cursor += t.bytes.size();
    }
    lay.payload_span = cursor;
    lay.header = {{"format_version", m.version},
                  {"backbone", to_json(m.backbone)},
                  {"head", to_json(m.head)},
                  {"normalization", to_json(m.normalization)},
                  {"quantized", m.quantized},
                  {"payload_bytes", cursor},
                  {"tensors", std::move(tensors)}};
    return lay;
}

std::vector<std::uint8_t> serialize_unchecked(const ModelBundle& m, std::size_t* header_bytes) {
    const Layout lay = plan_layout(m);
    const std::string text = lay.header.dump();
    std::vector<std::uint8_t> out(kMagic, kMagic + 4);
    put_le(out, m.version, 4);
    put_le(out, text.size(), 8);
    out.insert(out.end(), text.begin(), text.end());
    out.resize(align_up(out.size()), 0);
    const std::size_t base = out.size();
    if (header_bytes) *header_bytes = base;
    out.resize(base + lay.payload_span, 0);
    std::size_t i = 0;
    for (const auto& [name, t] : m.tensors) {
        if (!t.bytes.empty()) std::memcpy(out.data() + base + lay.offsets[i], t.bytes.data(), t.bytes.size());
        ++i;
    }
    return out;
}

void expect_tensor(const WeightMap& w, const std::string& name, DType dtype,
                   const std::vector<std::int64_t>& shape) {
    const auto it = w.find(name);
    if (it == w.end()) throw LoadError("missing tensor '" + name + "'");
    const StoredTensor& t = it->second;
    if (t.dtype != dtype) {
        throw LoadError("tensor '" + name + "' is " + dtype_name(t.dtype) + ", expected " +
                        dtype_name(dtype));
    }
    if (t.shape != shape) throw LoadError("tensor '" + name + "' has the wrong shape");
    if (t.bytes.size() != t.numel() * dtype_size(t.dtype)) {
        throw LoadError("tensor '" + name + "' byte size disagrees with its shape");
    }
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::vector<float> he_uniform(std::mt19937_64& rng, std::size_t n, std::size_t fan_in) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    std::vector<float> v(n);
    for (float& x : v) x = static_cast<float>((2.0 * uniform01(rng) - 1.0) * bound);
    return v;
}

}  // namespace

void ModelBundle::validate() const {
    if (version != kFormatVersion) throw LoadError("unsupported model version " + std::to_string(version));
    std::vector<ConvSpec> convs;
    std::vector<LinearSpec> linears;
    try {
        convs = backbone_conv_specs(backbone);
        const auto head_convs = head_conv_specs(head, backbone);
        convs.insert(convs.end(), head_convs.begin(), head_convs.end());
        linears = head_linear_specs(head, backbone);
        normalization.validate();
    } catch (const DomainError& e) {
        throw LoadError(std::string("invalid model config: ") + e.what());
    }
    std::set<std::string> expected;
    for (const ConvSpec& s : convs) {
        const std::vector<std::int64_t> ks{s.out_channels, s.in_channels / s.groups, s.kernel, s.kernel};
        const std::vector<std::int64_t> bs{s.out_channels};
        const std::string w = s.name + ".weight";
        expected.insert(w);
        expected.insert(s.name + ".bias");
        if (quantized) {
            expect_tensor(tensors, w, DType::i8, ks);
            expect_tensor(tensors, s.name + ".bias", DType::i32, bs);
            expect_tensor(tensors, s.name + ".weight_scale", DType::f32, bs);
            expected.insert(s.name + ".weight_scale");
            const StoredTensor& t = tensors.at(w);
            if (!t.input_qparams || !t.output_qparams) {
                throw LoadError("int8 tensor '" + w + "' lacks activation quantization parameters");
            }
        } else {
            expect_tensor(tensors, w, DType::f32, ks);
            expect_tensor(tensors, s.name + ".bias", DType::f32, bs);
        }
    }
    for (const LinearSpec& s : linears) {
        const std::vector<std::int64_t> ws{s.out_features, s.in_features};
        const std::vector<std::int64_t> bs{s.out_features};
        expected.insert(s.name + ".weight");
        expected.insert(s.name + ".bias");
        expect_tensor(tensors, s.name + ".weight", quantized ? DType::i8 : DType::f32, ws);
        expect_tensor(tensors, s.name + ".bias", DType::f32, bs);
        if (quantized) {
            expect_tensor(tensors, s.name + ".weight_scale", DType::f32, bs);
            expected.insert(s.name + ".weight_scale");
        }
    }
    for (const auto& [name, _] : tensors) {
        if (!expected.count(name)) throw LoadError("unexpected tensor '" + name + "'");
    }
}

std::vector<std::uint8_t> serialize_model(const ModelBundle& m) {
    m.validate();
    return serialize_unchecked(m, nullptr);
}

ModelBundle parse_model(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kPreamble) throw FormatError("truncated file: shorter than the preamble");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("bad magic: not an ALSN file");
    const auto version = static_cast<std::uint32_t>(get_le(bytes, 4, 4));
    if (version != kFormatVersion) {
        throw FormatError("unsupported format version " + std::to_string(version));
    }
    const std::uint64_t hlen = get_le(bytes, 8, 8);
    if (hlen > bytes.size() - kPreamble) throw FormatError("truncated header");
    const std::size_t base = align_up(kPreamble + hlen);
    if (base > bytes.size()) throw FormatError("truncated header padding");
    for (std::size_t i = kPreamble + hlen; i < base; ++i) {
        if (bytes[i] != 0) throw FormatError("non-zero header padding");
    }
    json h;
    try {
        h = json::parse(bytes.begin() + kPreamble, bytes.begin() + kPreamble + static_cast<std::ptrdiff_t>(hlen));
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed header JSON: ") + e.what());
    }

    ModelBundle m;
    m.version = version;
    try {
        if (!h.is_object()) throw FormatError("header is not a JSON object");
        if (h.value("format_version", 0u) != version) {
            throw FormatError("header version disagrees with the preamble");
        }
        m.backbone = backbone_from_json(h.at("backbone"));
        m.head = head_from_json(h.at("head"));
        m.normalization = normalization_from_json(h.at("normalization"));
        if (!h.at("quantized").is_boolean()) throw FormatError("'quantized' must be a boolean");
        m.quantized = h.at("quantized").get<bool>();

        const std::size_t payload = bytes.size() - base;
        const json& list = h.at("tensors");
        if (!list.is_array()) throw FormatError("'tensors' must be an array");
        std::size_t prev_end = 0;
        std::string prev_name;
        for (const json& e : list) {
            const std::string name = e.at("name").get<std::string>();
            StoredTensor t;
            t.dtype = parse_dtype(e.at("dtype").get<std::string>());
            for (const json& d : e.at("shape")) {
                if (!d.is_number_integer() || d.get<std::int64_t>() < 0) {
                    throw FormatError("tensor '" + name + "' has an invalid shape");
                }
                t.shape.push_back(d.get<std::int64_t>());
            }
            const auto offset = e.at("offset").get<std::uint64_t>();
            const auto nbytes = e.at("nbytes").get<std::uint64_t>();
            if (nbytes != t.numel() * dtype_size(t.dtype)) {
                throw FormatError("tensor '" + name + "' byte count disagrees with its shape");
            }
            if (offset % kAlignment != 0) {
                throw FormatError("tensor '" + name + "' offset is not 64-byte aligned");
            }
            if (!prev_name.empty() && offset < prev_end) {
                throw FormatError("overlapping offsets: '" + prev_name + "' and '" + name + "'");
            }
            if (offset > payload || nbytes > payload - offset) {
                throw FormatError("truncated payload: tensor '" + name + "' runs past end of file");
            }
            const auto* p = bytes.data() + base + offset;
            t.bytes.assign(p, p + nbytes);
            if (e.contains("input_qparams")) t.input_qparams = qparams_from(e.at("input_qparams"), name);
            if (e.contains("output_qparams")) t.output_qparams = qparams_from(e.at("output_qparams"), name);
            if (!m.tensors.emplace(name, std::move(t)).second) {
                throw FormatError("duplicate tensor '" + name + "'");
            }
            prev_end = offset + nbytes;
            prev_name = name;
        }
        if (h.contains("payload_bytes") && h.at("payload_bytes").get<std::uint64_t>() != payload) {
            throw FormatError("payload is " + std::to_string(payload) + " bytes, header declares " +
                              std::to_string(h.at("payload_bytes").get<std::uint64_t>()));
        }
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed header: ") + e.what());
    } catch (const InputError& e) {
        throw FormatError(std::string("invalid header config: ") + e.what());
    }
    m.validate();
    return m;
}

void save_model(const ModelBundle& m, const std::filesystem::path& path) {
    const auto bytes = serialize_model(m);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write '" + path.string() + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw InputError("write to '" + path.string() + "' failed");
}

ModelBundle load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open model '" + path.string() + "'");
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                          std::istreambuf_iterator<char>());
    return parse_model(bytes);
}

ModelBundle random_init(const BackboneConfig& bb, const HeadConfig& head, std::uint64_t seed,
                        const Normalization& norm) {
    ModelBundle m;
    m.backbone = bb;
    m.head = head;
    m.normalization = norm;
    auto convs = backbone_conv_specs(bb);
    const auto head_convs = head_conv_specs(head, bb);
    convs.insert(convs.end(), head_convs.begin(), head_convs.end());
    std::mt19937_64 rng(seed);
    for (const ConvSpec& s : convs) {
        const std::size_t fan_in = static_cast<std::size_t>(s.in_channels / s.groups) * s.kernel * s.kernel;
        const auto k = he_uniform(rng, fan_in * s.out_channels, fan_in);
        m.tensors[s.name + ".weight"] =
            StoredTensor::from_f32({s.out_channels, s.in_channels / s.groups, s.kernel, s.kernel}, k);
        m.tensors[s.name + ".bias"] =
            StoredTensor::from_f32({s.out_channels}, std::vector<float>(s.out_channels, 0.0f));
    }
    for (const LinearSpec& s : head_linear_specs(head, bb)) {
        const auto w = he_uniform(rng, static_cast<std::size_t>(s.in_features) * s.out_features,
                                  s.in_features);
        m.tensors[s.name + ".weight"] = StoredTensor::from_f32({s.out_features, s.in_features}, w);
        m.tensors[s.name + ".bias"] =
            StoredTensor::from_f32({s.out_features}, std::vector<float>(s.out_features, 0.0f));
    }
    return m;
}

ModelSize model_size_bytes(const ModelBundle& m) {
    ModelSize s;
    s.total = serialize_unchecked(m, &s.header).size();
    for (const auto& [_, t] : m.tensors) s.payload += t.bytes.size();
    return s;
}

std::size_t parameter_count(const BackboneConfig& bb, const HeadConfig& head) {
    std::size_t n = 0;
    for (const auto& s : backbone_conv_specs(bb)) n += s.parameter_count();
    for (const auto& s : head_conv_specs(head, bb)) n += s.parameter_count();
    for (const auto& s : head_linear_specs(head, bb)) n += s.parameter_count();
    return n;
}

}  // namespace alis
