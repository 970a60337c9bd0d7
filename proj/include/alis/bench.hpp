#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "alis/model.hpp"
#include "alis/pipeline.hpp"

namespace alis {

/// Linear interpolation between closest ranks: with the values sorted
/// ascending, position p*(n-1) is interpolated between its two neighbours.
/// p is a fraction in [0, 1]. Throws DomainError on empty input.
double percentile(std::vector<double> values, double p);

// FNV-1a 64-bit, lower-case hex.
std::string fnv1a_hex(std::span<const std::uint8_t> bytes);

struct BenchReport {
    std::vector<double> times_ms;  // timed iterations only
    int warmup = 0;
    double mean_ms = 0.0;
    double median_ms = 0.0;
    double p90_ms = 0.0;
    int threads = 1;
    std::string image;
    std::string image_hash;
    std::string model;
    std::string model_hash;

    nlohmann::json to_json() const;
};

// Fills the statistics from already-measured post-warmup times.
BenchReport summarize_bench(std::vector<double> times_ms, int warmup);

/// Runs `warmup` untimed then `iters` timed end-to-end segmentations.
BenchReport run_bench(const Model& model, const Image& img, const std::optional<BBox>& bbox, int iters,
                      int warmup, const PreprocessOptions& opts = {});

}  // namespace alis
