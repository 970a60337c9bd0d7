#pragma once

#include <algorithm>

namespace alis::detail {

// Output-column range [lo, hi) whose input column ox*stride - pad + kx stays
// inside [0, in_w).
inline void valid_columns(int kx, int in_w, int out_w, int stride, int pad, int& lo, int& hi) {
    const int first = pad - kx;  // smallest ox*stride that is valid
    lo = first <= 0 ? 0 : (first + stride - 1) / stride;
    const int last = in_w - 1 + pad - kx;  // largest valid ox*stride
    hi = last < 0 ? 0 : std::min(out_w, last / stride + 1);
}

// acc[ox] += wv * row[ox*stride - pad + kx] over all in-bounds columns.
// Out-of-bounds taps read zero padding and are skipped.
template <typename Acc, typename In, typename W>
inline void accumulate_tap(Acc* acc, const In* row, W wv, int kx, int in_w, int out_w, int stride,
                           int pad) {
    int lo, hi;
    valid_columns(kx, in_w, out_w, stride, pad, lo, hi);
    if (lo >= hi) return;
    const Acc wa = static_cast<Acc>(wv);
    if (stride == 1) {
        const In* base = row + (kx - pad);
        for (int ox = lo; ox < hi; ++ox) acc[ox] += wa * static_cast<Acc>(base[ox]);
    } else {
        for (int ox = lo; ox < hi; ++ox) {
            acc[ox] += wa * static_cast<Acc>(row[ox * stride - pad + kx]);
        }
    }
}

}  // namespace alis::detail
