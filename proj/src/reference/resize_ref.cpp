#include <string>

#include "alis/error.hpp"
#include "alis/tensor.hpp"
#include "../interp_detail.hpp"

namespace alis::ref {

Tensor resize_bilinear(const Tensor& t, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1) {
        throw DomainError("resize target must be at least 1x1, got " + std::to_string(out_h) +
                          "x" + std::to_string(out_w));
    }
    const Shape in = t.shape();
    Tensor out(Shape{in.n, in.c, out_h, out_w});
    const auto ty = detail::make_axis_taps(in.h, out_h);
    const auto tx = detail::make_axis_taps(in.w, out_w);
    for (int n = 0; n < in.n; ++n) {
        for (int c = 0; c < in.c; ++c) {
            for (int oy = 0; oy < out_h; ++oy) {
                for (int ox = 0; ox < out_w; ++ox) {
                    float top = detail::lerp2(t.at(n, c, ty.i0[oy], tx.i0[ox]),
                                              t.at(n, c, ty.i0[oy], tx.i1[ox]), tx.frac[ox]);
                    float bot = detail::lerp2(t.at(n, c, ty.i1[oy], tx.i0[ox]),
                                              t.at(n, c, ty.i1[oy], tx.i1[ox]), tx.frac[ox]);
                    out.at(n, c, oy, ox) = detail::lerp2(top, bot, ty.frac[oy]);
                }
            }
        }
    }
    return out;
}

}  // namespace alis::ref
