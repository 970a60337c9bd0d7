#pragma once

#include <cstdint>
#include <vector>

namespace alis::detail {

// Source taps for one output axis of a half-pixel-center bilinear resize.
// Coordinates are derived with integer arithmetic so that identity resizes
// (and exact pixel hits) produce weight 0 exactly on every platform.
struct AxisTaps {
    std::vector<int> i0;
    std::vector<int> i1;
    std::vector<float> frac;
};

inline AxisTaps make_axis_taps(int in_size, int out_size) {
    AxisTaps taps;
    taps.i0.resize(out_size);
    taps.i1.resize(out_size);
    taps.frac.resize(out_size);
    const std::int64_t den = 2 * static_cast<std::int64_t>(out_size);
    for (int o = 0; o < out_size; ++o) {
        // src = (o + 0.5) * in / out - 0.5 = num / den
        std::int64_t num = (2 * static_cast<std::int64_t>(o) + 1) * in_size - out_size;
        int base;
        float frac;
        if (num <= 0) {
            base = 0;
            frac = 0.0f;
        } else {
            base = static_cast<int>(num / den);
            frac = static_cast<float>(static_cast<double>(num - base * den) / static_cast<double>(den));
        }
        if (base >= in_size - 1) {
            base = in_size - 1;
            frac = 0.0f;
        }
        taps.i0[o] = base;
        taps.i1[o] = base + 1 < in_size ? base + 1 : base;
        taps.frac[o] = frac;
    }
    return taps;
}

inline float lerp2(float a, float b, float t) { return (1.0f - t) * a + t * b; }

}  // namespace alis::detail
