#include "cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>

#include "alis/bench.hpp"
#include "alis/calibrate.hpp"
#include "alis/error.hpp"
#include "alis/eval.hpp"
#include "alis/image_io.hpp"
#include "alis/model_io.hpp"
#include "alis/parallel.hpp"
#include "alis/pipeline.hpp"

namespace alis::cli {

namespace {

using nlohmann::json;

std::vector<std::uint8_t> file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

BBox parse_bbox(const std::string& s) {
    std::vector<double> v;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        std::size_t used = 0;
        double d = 0.0;
        try {
            d = std::stod(tok, &used);
        } catch (const std::exception&) {
            throw InputError("malformed --bbox '" + s + "': expected x0,y0,x1,y1");
        }
        if (used != tok.size()) throw InputError("malformed --bbox '" + s + "': expected x0,y0,x1,y1");
        v.push_back(d);
    }
    if (v.size() != 4) throw InputError("malformed --bbox '" + s + "': expected x0,y0,x1,y1");
    BBox b{v[0], v[1], v[2], v[3]};
    try {
        b.validate();
    } catch (const DomainError& e) {
        throw InputError("invalid --bbox '" + s + "': " + e.what());
    }
    return b;
}

json size_json(const ModelSize& s) {
    return {{"total_bytes", s.total}, {"payload_bytes", s.payload}, {"header_bytes", s.header}};
}

void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write '" + path + "'");
    out << j.dump(2) << '\n';
    if (!out) throw InputError("write to '" + path + "' failed");
}

struct Options {
    std::string config, model, image, out, manifest, report, bbox;
    std::uint64_t seed = 0;
    int iters = 20;
    int warmup = 3;
    int height = 1024;
};

PreprocessOptions preprocess_options(const Options& o) {
    PreprocessOptions p;
    p.target_height = o.height;
    return p;
}

std::optional<BBox> bbox_option(const Options& o) {
    if (o.bbox.empty()) return std::nullopt;
    return parse_bbox(o.bbox);
}

int cmd_init(const Options& o, std::ostream& out) {
    const ModelConfig mc = load_model_config(o.config);
    const ModelBundle m = random_init(mc.backbone, mc.head, o.seed, mc.normalization);
    save_model(m, o.out);
    out << json{{"path", o.out},
                {"parameters", parameter_count(m.backbone, m.head)},
                {"seed", o.seed},
                {"size", size_json(model_size_bytes(m))}}
               .dump()
        << '\n';
    return kOk;
}

int cmd_segment(const Options& o, std::ostream& out) {
    const std::optional<BBox> bbox = bbox_option(o);
    const Model model(load_model(o.model));
    const Image img = read_image(o.image);
    const SegMask mask = segment_image(model, img, bbox, preprocess_options(o));
    write_mask(mask, o.out);
    out << json{{"path", o.out},
                {"width", mask.width},
                {"height", mask.height},
                {"person_pixels", mask.count()},
                {"mask_fnv1a", fnv1a_hex(mask.data)}}
               .dump()
        << '\n';
    return kOk;
}

int cmd_eval(const Options& o, std::ostream& out, std::ostream& err) {
    const Manifest manifest = Manifest::load(o.manifest);
    if (manifest.records.empty()) throw InputError("manifest '" + o.manifest + "' has no records");
    const Model model(load_model(o.model));
    const EvalReport report = evaluate(model, manifest, preprocess_options(o));
    write_json_file(o.report, report.to_json());
    for (const EvalFailure& f : report.failures) {
        err << "record " << f.index << " (" << f.image << ") failed: " << f.error << '\n';
    }
    out << json{{"report", o.report},
                {"count", report.overall.count},
                {"failures", report.failures.size()},
                {"mean_iou", report.overall.mean},
                {"std_iou", report.overall.std}}
               .dump()
        << '\n';
    if (report.items.empty()) {
        err << "no record could be evaluated\n";
        return kUsageError;
    }
    return kOk;
}

int cmd_calibrate(const Options& o, std::ostream& out) {
    const Manifest manifest = Manifest::load(o.manifest);
    if (manifest.records.empty()) throw InputError("manifest '" + o.manifest + "' has no records");
    const ModelBundle m = load_model(o.model);
    const ModelBundle q = quantize_model(m, manifest, preprocess_options(o));
    save_model(q, o.out);
    const ModelSize fs = model_size_bytes(m);
    const ModelSize qs = model_size_bytes(q);
    out << json{{"path", o.out},
                {"float_size", size_json(fs)},
                {"quantized_size", size_json(qs)},
                {"payload_ratio", static_cast<double>(qs.payload) / static_cast<double>(fs.payload)}}
               .dump()
        << '\n';
    return kOk;
}

int cmd_bench(const Options& o, std::ostream& out) {
    if (o.iters < 1) throw InputError("--iters must be >= 1");
    if (o.warmup < 0) throw InputError("--warmup must be >= 0");
    const std::optional<BBox> bbox = bbox_option(o);
    const auto model_bytes = file_bytes(o.model);
    const Model model(parse_model(model_bytes));
    const Image img = read_image(o.image);
    BenchReport r = run_bench(model, img, bbox, o.iters, o.warmup, preprocess_options(o));
    r.image = o.image;
    r.image_hash = fnv1a_hex(file_bytes(o.image));
    r.model = o.model;
    r.model_hash = fnv1a_hex(model_bytes);
    if (!o.report.empty()) write_json_file(o.report, r.to_json());
    out << r.to_json().dump() << '\n';
    return kOk;
}

int cmd_inspect(const Options& o, std::ostream& out) {
    const ModelBundle m = load_model(o.model);
    std::size_t conv_int8 = 0;
    for (const auto& [name, t] : m.tensors) conv_int8 += t.dtype == DType::i8 ? 1 : 0;
    out << json{{"path", o.model},
                {"version", m.version},
                {"quantized", m.quantized},
                {"parameters", parameter_count(m.backbone, m.head)},
                {"tensors", m.tensors.size()},
                {"int8_tensors", conv_int8},
                {"level_channels", m.backbone.level_channels()},
                {"width_multiplier", m.backbone.width_multiplier},
                {"size", size_json(model_size_bytes(m))}}
               .dump()
        << '\n';
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"ALiSNet human segmentation: inference, quantization and evaluation"};
    app.name("alisnet");
    app.require_subcommand(1);
    Options o;

    auto* init = app.add_subcommand("init", "Write a randomly initialized model");
    init->add_option("--config", o.config, "Model config JSON")->required();
    init->add_option("--out", o.out, "Output .alsn path")->required();
    init->add_option("--seed", o.seed, "Initialization seed");

    auto* segment = app.add_subcommand("segment", "Segment one image into a person mask");
    segment->add_option("--model", o.model)->required();
    segment->add_option("--image", o.image)->required();
    segment->add_option("--out", o.out, "Mask path (.png or .pgm)")->required();
    segment->add_option("--bbox", o.bbox, "Person box x0,y0,x1,y1 in source pixels");

    auto* eval = app.add_subcommand("eval", "Score a model on a manifest");
    eval->add_option("--model", o.model)->required();
    eval->add_option("--manifest", o.manifest, "JSON-lines manifest")->required();
    eval->add_option("--report", o.report, "Report JSON path")->required();

    auto* calibrate = app.add_subcommand("calibrate", "Quantize a float model to int8");
    calibrate->add_option("--model", o.model)->required();
    calibrate->add_option("--manifest", o.manifest, "Calibration images")->required();
    calibrate->add_option("--out", o.out)->required();

    auto* bench = app.add_subcommand("bench", "Time end-to-end segmentation");
    bench->add_option("--model", o.model)->required();
    bench->add_option("--image", o.image)->required();
    bench->add_option("--iters", o.iters, "Timed iterations")->capture_default_str();
    bench->add_option("--warmup", o.warmup, "Untimed iterations")->capture_default_str();
    bench->add_option("--bbox", o.bbox, "Person box x0,y0,x1,y1");
    bench->add_option("--report", o.report, "Also write the report here");

    auto* inspect = app.add_subcommand("inspect", "Print model metadata and sizes");
    inspect->add_option("--model", o.model)->required();

    for (auto* sub : {segment, eval, calibrate, bench}) {
        sub->add_option("--height", o.height, "Network input height")->capture_default_str();
    }

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    }

    configure_threads_from_env();
    try {
        if (*init) return cmd_init(o, out);
        if (*segment) return cmd_segment(o, out);
        if (*eval) return cmd_eval(o, out, err);
        if (*calibrate) return cmd_calibrate(o, out);
        if (*bench) return cmd_bench(o, out);
        if (*inspect) return cmd_inspect(o, out);
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    } catch (const FormatError& e) {
        err << "format error: " << e.what() << '\n';
        return kUsageError;
    } catch (const LoadError& e) {
        err << "load error: " << e.what() << '\n';
        return kUsageError;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << '\n';
        return kUsageError;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kInternalError;
    }
    return kUsageError;
}

}  // namespace alis::cli
