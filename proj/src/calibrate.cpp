#include "alis/calibrate.hpp"

#include "alis/error.hpp"
#include "alis/image_io.hpp"

namespace alis {

namespace {

ConvWeights float_conv(const WeightMap& w, const ConvSpec& s) {
    return load_conv(w, s).weights();
}

}  // namespace

ModelBundle quantize_model(const ModelBundle& m, std::span<const Tensor> inputs) {
    if (m.quantized) throw DomainError("model is already quantized");
    if (inputs.empty()) throw DomainError("empty calibration set");
    const Model model(m);
    ActivationRecorder rec;
    for (const Tensor& x : inputs) model.forward(x, &rec);

    ModelBundle q = m;
    q.quantized = true;
    auto convs = backbone_conv_specs(m.backbone);
    const auto head_convs = head_conv_specs(m.head, m.backbone);
    convs.insert(convs.end(), head_convs.begin(), head_convs.end());
    for (const ConvSpec& s : convs) {
        const auto it = rec.layers.find(s.name);
        if (it == rec.layers.end()) throw DomainError("layer '" + s.name + "' saw no calibration data");
        const QuantParams in_qp = compute_qparams(it->second.input);
        const QuantParams out_qp = compute_qparams(it->second.output);
        const QuantConvWeights qw = quantize_conv_weights(float_conv(m.tensors, s), in_qp);
        StoredTensor wt = StoredTensor::from_i8(q.tensors.at(s.name + ".weight").shape, qw.kernel);
        wt.input_qparams = in_qp;
        wt.output_qparams = out_qp;
        q.tensors[s.name + ".weight"] = std::move(wt);
        q.tensors[s.name + ".bias"] = StoredTensor::from_i32({s.out_channels}, qw.bias);
        q.tensors[s.name + ".weight_scale"] = StoredTensor::from_f32({s.out_channels}, qw.channel_scales);
    }
    for (const LinearSpec& s : head_linear_specs(m.head, m.backbone)) {
        const auto w = m.tensors.at(s.name + ".weight").to_f32();
        std::vector<std::int8_t> qv;
        std::vector<float> scales;
        quantize_rows_symmetric(w, s.out_features, qv, scales);
        q.tensors[s.name + ".weight"] = StoredTensor::from_i8({s.out_features, s.in_features}, qv);
        q.tensors[s.name + ".weight_scale"] = StoredTensor::from_f32({s.out_features}, scales);
    }
    q.validate();
    return q;
}

ModelBundle quantize_model(const ModelBundle& m, const Manifest& calib, const PreprocessOptions& opts) {
    std::vector<Tensor> inputs;
    for (const ManifestRecord& r : calib.records) {
        Image img;
        try {
            img = read_image(calib.resolve(r.image));
        } catch (const InputError&) {
            continue;
        }
        inputs.push_back(preprocess(img, r.bbox, m.normalization, opts).input);
    }
    if (inputs.empty()) throw DomainError("empty calibration set: no readable image");
    return quantize_model(m, inputs);
}

}  // namespace alis
