#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "alis/mask.hpp"
#include "alis/model.hpp"
#include "alis/pipeline.hpp"

namespace alis {

struct ManifestRecord {
    std::string image;
    std::string mask;
    std::optional<BBox> bbox;
    std::optional<std::string> view;  // "front" or "side"
};

/// JSON-lines list of image/mask pairs. Relative paths resolve against
/// `base_dir` (the manifest's own directory when loaded from a file).
struct Manifest {
    std::vector<ManifestRecord> records;
    std::filesystem::path base_dir;

    // Throws InputError naming the offending line. Blank lines are skipped.
    static Manifest parse(std::istream& in, const std::filesystem::path& base_dir = {});
    static Manifest load(const std::filesystem::path& path);

    std::filesystem::path resolve(const std::string& p) const;
};

/// 100 * |pred & gt| / |pred | gt|; two empty masks score 100.
double iou(const SegMask& pred, const SegMask& gt);

struct SummaryStats {
    std::size_t count = 0;
    double mean = 0.0;
    double std = 0.0;  // population
    double min = 0.0;
    double max = 0.0;
};

// Summation in the given order. Empty input gives a zero-count summary.
SummaryStats summarize(std::span<const double> values);

struct EvalItem {
    std::size_t index = 0;
    std::string image;
    std::optional<std::string> view;
    double iou = 0.0;
};

struct EvalFailure {
    std::size_t index = 0;
    std::string image;
    std::string error;
};

struct EvalReport {
    std::vector<EvalItem> items;  // manifest order
    std::vector<EvalFailure> failures;
    SummaryStats overall;
    std::map<std::string, SummaryStats> per_view;

    nlohmann::json to_json() const;
};

// Builds the aggregate fields from items and failures (both re-sorted by
// manifest index, so the result does not depend on completion order).
EvalReport make_report(std::vector<EvalItem> items, std::vector<EvalFailure> failures);

/// Segments every record and scores it against its mask. Unreadable or
/// mismatched records become failures and are left out of the statistics.
/// Records are processed in parallel.
EvalReport evaluate(const Model& model, const Manifest& manifest, const PreprocessOptions& opts = {});

}  // namespace alis
