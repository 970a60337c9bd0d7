#include "alis/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "alis/error.hpp"
#include "alis/image_io.hpp"

namespace alis {

using nlohmann::json;

namespace {

ManifestRecord parse_record(const json& j, const std::string& where) {
    if (!j.is_object()) throw InputError(where + ": record must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        if (key != "image" && key != "mask" && key != "bbox" && key != "view") {
            throw InputError(where + ": unknown key '" + key + "'");
        }
    }
    ManifestRecord r;
    for (const char* key : {"image", "mask"}) {
        if (!j.contains(key) || !j.at(key).is_string() || j.at(key).get<std::string>().empty()) {
            throw InputError(where + ": '" + key + "' must be a non-empty string");
        }
    }
    r.image = j.at("image").get<std::string>();
    r.mask = j.at("mask").get<std::string>();
    if (j.contains("bbox")) {
        const json& b = j.at("bbox");
        if (!b.is_array() || b.size() != 4 ||
            !std::all_of(b.begin(), b.end(), [](const json& v) { return v.is_number(); })) {
            throw InputError(where + ": 'bbox' must be [x0, y0, x1, y1]");
        }
        BBox box{b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
        try {
            box.validate();
        } catch (const DomainError& e) {
            throw InputError(where + ": " + e.what());
        }
        r.bbox = box;
    }
    if (j.contains("view")) {
        const json& v = j.at("view");
        if (!v.is_string() || (v.get<std::string>() != "front" && v.get<std::string>() != "side")) {
            throw InputError(where + ": 'view' must be \"front\" or \"side\"");
        }
        r.view = v.get<std::string>();
    }
    return r;
}

json stats_json(const SummaryStats& s) {
    return {{"count", s.count}, {"mean", s.mean}, {"std", s.std}, {"min", s.min}, {"max", s.max}};
}

}  // namespace

Manifest Manifest::parse(std::istream& in, const std::filesystem::path& base_dir) {
    Manifest m;
    m.base_dir = base_dir;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = "manifest line " + std::to_string(lineno);
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw InputError(where + ": " + e.what());
        }
        m.records.push_back(parse_record(j, where));
    }
    return m;
}

Manifest Manifest::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open manifest '" + path.string() + "'");
    return parse(in, path.parent_path());
}

std::filesystem::path Manifest::resolve(const std::string& p) const {
    const std::filesystem::path path(p);
    return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
}

double iou(const SegMask& pred, const SegMask& gt) {
    pred.validate();
    gt.validate();
    if (pred.width != gt.width || pred.height != gt.height) {
        throw ShapeError("iou needs masks of equal size");
    }
    std::size_t inter = 0;
    std::size_t uni = 0;
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        inter += pred.data[i] & gt.data[i];
        uni += pred.data[i] | gt.data[i];
    }
    if (uni == 0) return 100.0;
    return 100.0 * static_cast<double>(inter) / static_cast<double>(uni);
}

SummaryStats summarize(std::span<const double> values) {
    SummaryStats s;
    s.count = values.size();
    if (values.empty()) return s;
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    double sq = 0.0;
    for (double v : values) sq += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(sq / static_cast<double>(values.size()));
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    s.min = *lo;
    s.max = *hi;
    return s;
}

EvalReport make_report(std::vector<EvalItem> items, std::vector<EvalFailure> failures) {
    EvalReport r;
    std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) { return a.index < b.index; });
    std::sort(failures.begin(), failures.end(),
              [](const auto& a, const auto& b) { return a.index < b.index; });
    std::vector<double> all;
    std::map<std::string, std::vector<double>> by_view;
    for (const EvalItem& it : items) {
        all.push_back(it.iou);
        if (it.view) by_view[*it.view].push_back(it.iou);
    }
    r.overall = summarize(all);
    for (const auto& [view, v] : by_view) r.per_view[view] = summarize(v);
    r.items = std::move(items);
    r.failures = std::move(failures);
    return r;
}

json EvalReport::to_json() const {
    json items_j = json::array();
    for (const EvalItem& it : items) {
        json e = {{"index", it.index}, {"image", it.image}, {"iou", it.iou}};
        if (it.view) e["view"] = *it.view;
        items_j.push_back(std::move(e));
    }
    json fails = json::array();
    for (const EvalFailure& f : failures) {
        fails.push_back({{"index", f.index}, {"image", f.image}, {"error", f.error}});
    }
    json views = json::object();
    for (const auto& [view, s] : per_view) views[view] = stats_json(s);
    return {{"count", overall.count},
            {"mean_iou", overall.mean},
            {"std_iou", overall.std},
            {"min_iou", overall.min},
            {"max_iou", overall.max},
            {"per_view", views},
            {"items", items_j},
            {"failures", fails}};
}

EvalReport evaluate(const Model& model, const Manifest& manifest, const PreprocessOptions& opts) {
    const std::size_t n = manifest.records.size();
    std::vector<std::optional<EvalItem>> items(n);
    std::vector<std::optional<EvalFailure>> failures(n);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(n); ++k) {
        const auto i = static_cast<std::size_t>(k);
        const ManifestRecord& r = manifest.records[i];
        try {
            const Image img = read_image(manifest.resolve(r.image));
            const SegMask gt = read_mask(manifest.resolve(r.mask));
            if (gt.width != img.width || gt.height != img.height) {
                throw InputError("mask size differs from image size");
            }
            const SegMask pred = segment_image(model, img, r.bbox, opts);
            items[i] = EvalItem{i, r.image, r.view, iou(pred, gt)};
        } catch (const std::exception& e) {
            failures[i] = EvalFailure{i, r.image, e.what()};
        }
    }
    std::vector<EvalItem> ok;
    std::vector<EvalFailure> bad;
    for (std::size_t i = 0; i < n; ++i) {
        if (items[i]) ok.push_back(std::move(*items[i]));
        if (failures[i]) bad.push_back(std::move(*failures[i]));
    }
    return make_report(std::move(ok), std::move(bad));
}

}  // namespace alis
