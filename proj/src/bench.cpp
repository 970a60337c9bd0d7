#include "alis/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "alis/error.hpp"
#include "alis/parallel.hpp"

namespace alis {

double percentile(std::vector<double> values, double p) {
    if (values.empty()) throw DomainError("percentile of an empty sample");
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("percentile fraction must lie in [0, 1]");
    std::sort(values.begin(), values.end());
    const double pos = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + (values[hi] - values[lo]) * frac;
}

std::string fnv1a_hex(std::span<const std::uint8_t> bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::uint8_t b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

nlohmann::json BenchReport::to_json() const {
    return {{"times_ms", times_ms},   {"iterations", times_ms.size()},
            {"warmup", warmup},       {"mean_ms", mean_ms},
            {"median_ms", median_ms}, {"p90_ms", p90_ms},
            {"threads", threads},     {"percentile_rule", "linear interpolation at p*(n-1)"},
            {"image", {{"path", image}, {"fnv1a", image_hash}}},
            {"model", {{"path", model}, {"fnv1a", model_hash}}}};
}

BenchReport summarize_bench(std::vector<double> times_ms, int warmup) {
    BenchReport r;
    r.warmup = warmup;
    r.threads = num_threads();
    double sum = 0.0;
    for (double t : times_ms) sum += t;
    r.mean_ms = sum / static_cast<double>(times_ms.size());
    r.median_ms = percentile(times_ms, 0.5);
    r.p90_ms = percentile(times_ms, 0.9);
    r.times_ms = std::move(times_ms);
    return r;
}

BenchReport run_bench(const Model& model, const Image& img, const std::optional<BBox>& bbox, int iters,
                      int warmup, const PreprocessOptions& opts) {
    if (iters < 1) throw DomainError("bench needs at least one timed iteration");
    if (warmup < 0) throw DomainError("warmup count must be non-negative");
    for (int i = 0; i < warmup; ++i) segment_image(model, img, bbox, opts);
    std::vector<double> times;
    for (int i = 0; i < iters; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        segment_image(model, img, bbox, opts);
        const auto t1 = std::chrono::steady_clock::now();
        times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    return summarize_bench(std::move(times), warmup);
}

}  // namespace alis
