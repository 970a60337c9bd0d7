#include <gtest/gtest.h>

#include "alis/bench.hpp"
#include "alis/error.hpp"
#include "alis/parallel.hpp"
#include "alis/pipeline.hpp"
#include "support.hpp"

namespace alis {
namespace {

using testing::Rng;

Image random_image(Rng& rng, int w, int h) {
    Image img(w, h);
    for (auto& v : img.rgb) v = static_cast<std::uint8_t>(testing::uniform_int(rng, 0, 255));
    return img;
}

ResizeRecord record_for(int w, int h, std::optional<BBox> box = {}, int target = 64) {
    PreprocessOptions opts;
    opts.target_height = target;
    return preprocess(Image(w, h), box, Normalization{}, opts).record;
}

LogitMap constant_logits(const ResizeRecord& r, float bg, float fg) {
    Tensor t(Shape{1, 2, r.padded_h, r.padded_w});
    for (float& v : t.plane(0, 0)) v = bg;
    for (float& v : t.plane(0, 1)) v = fg;
    return {t, 1};
}

TEST(BBoxTest, EnlargeExamples) {
    EXPECT_EQ(enlarge_bbox({100, 200, 300, 600}, 1000, 1000), (BBox{80, 160, 320, 640}));
    EXPECT_EQ(enlarge_bbox({0, 0, 50, 50}, 100, 100), (BBox{0, 0, 55, 55}));
    EXPECT_EQ(enlarge_bbox({10, 10, 100, 100}, 100, 100), (BBox{1, 1, 100, 100}));
}

TEST(BBoxTest, Rejections) {
    EXPECT_THROW(enlarge_bbox({10, 10, 10, 20}, 100, 100), DomainError);
    EXPECT_THROW(enlarge_bbox({30, 10, 20, 20}, 100, 100), DomainError);
    EXPECT_THROW(enlarge_bbox({200, 200, 300, 300}, 100, 100), DomainError);
    EXPECT_THROW(enlarge_bbox({0, 0, NAN, 20}, 100, 100), DomainError);
}

TEST(BBoxTest, EnlargedContainsOriginal) {
    Rng rng(1);
    for (int i = 0; i < 200; ++i) {
        const int w = testing::uniform_int(rng, 10, 500), h = testing::uniform_int(rng, 10, 500);
        const double x0 = testing::uniform(rng, 0, w - 2), y0 = testing::uniform(rng, 0, h - 2);
        const BBox b{x0, y0, testing::uniform(rng, x0 + 1, w), testing::uniform(rng, y0 + 1, h)};
        const BBox e = enlarge_bbox(b, w, h);
        EXPECT_LE(e.x0, b.x0);
        EXPECT_LE(e.y0, b.y0);
        EXPECT_GE(e.x1, b.x1);
        EXPECT_GE(e.y1, b.y1);
        EXPECT_GE(e.x0, 0.0);
        EXPECT_LE(e.x1, w);
    }
}

TEST(PreprocessTest, Dimensions) {
    const ResizeRecord big = record_for(1536, 2048, {}, 1024);
    EXPECT_EQ(big.resized_h, 1024);
    EXPECT_EQ(big.resized_w, 768);
    EXPECT_EQ(big.padded_h, 1024);
    EXPECT_EQ(big.padded_w, 768);

    const ResizeRecord narrow = record_for(700, 1024, {}, 1024);
    EXPECT_EQ(narrow.resized_w, 700);
    EXPECT_EQ(narrow.padded_w, 704);

    const ResizeRecord odd = record_for(50, 100, {}, 70);
    EXPECT_EQ(odd.resized_w, 35);
    EXPECT_EQ(odd.padded_h, 96);
    EXPECT_EQ(odd.padded_w, 64);
}

TEST(PreprocessTest, CropFollowsEnlargedBox) {
    const ResizeRecord r = record_for(200, 100, BBox{50.5, 20, 90, 70});
    // Enlarged: x 46.55..93.95, y 15..75; floor / ceil to whole pixels.
    EXPECT_EQ(r.crop_x0, 46);
    EXPECT_EQ(r.crop_y0, 15);
    EXPECT_EQ(r.crop_w, 94 - 46);
    EXPECT_EQ(r.crop_h, 60);
}

TEST(PreprocessTest, NormalizesAndZeroPads) {
    Image img(40, 60);
    for (int y = 0; y < 60; ++y) {
        for (int x = 0; x < 40; ++x) {
            img.at(x, y, 0) = 255;
            img.at(x, y, 1) = 0;
            img.at(x, y, 2) = 51;
        }
    }
    const Normalization norm{{0.5, 0.25, 0.1}, {0.5, 0.25, 0.2}};
    PreprocessOptions opts;
    opts.target_height = 60;
    const Preprocessed p = preprocess(img, {}, norm, opts);
    ASSERT_EQ(p.input.shape(), (Shape{1, 3, 64, 64}));
    const double expect[3] = {(1.0 - 0.5) / 0.5, (0.0 - 0.25) / 0.25, (0.2 - 0.1) / 0.2};
    for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < 64; ++y) {
            for (int x = 0; x < 64; ++x) {
                const bool inside = y < 60 && x < 40;
                EXPECT_NEAR(p.input.at(0, c, y, x), inside ? expect[c] : 0.0, 1e-6);
            }
        }
    }
}

TEST(PreprocessTest, MatchesResizeOracle) {
    Rng rng(2);
    const Image img = random_image(rng, 23, 17);
    const Normalization norm;
    PreprocessOptions opts;
    opts.target_height = 40;
    const Preprocessed p = preprocess(img, {}, norm, opts);
    Tensor src(Shape{1, 3, 17, 23});
    for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < 17; ++y) {
            for (int x = 0; x < 23; ++x) src.at(0, c, y, x) = static_cast<float>(img.at(x, y, c) / 255.0);
        }
    }
    const Tensor r = testing::naive_resize(src, 40, p.record.resized_w);
    for (int c = 0; c < 3; ++c) {
        for (int y = 0; y < 40; ++y) {
            for (int x = 0; x < p.record.resized_w; ++x) {
                EXPECT_NEAR(p.input.at(0, c, y, x), (r.at(0, c, y, x) - norm.mean[c]) / norm.std[c], 1e-4);
            }
        }
    }
}

TEST(PreprocessTest, Errors) {
    EXPECT_THROW(preprocess(Image{}, {}, Normalization{}), InputError);
    PreprocessOptions bad;
    bad.target_height = 0;
    EXPECT_THROW(preprocess(Image(4, 4), {}, Normalization{}, bad), DomainError);
    EXPECT_THROW(preprocess(Image(4, 4), BBox{5, 5, 9, 9}, Normalization{}), DomainError);
}

TEST(ResizeRecordTest, CornerRoundTrip) {
    Rng rng(3);
    const ResizeRecord r = record_for(333, 517, BBox{40, 50, 300, 480});
    const auto tl = r.to_network(r.crop_x0, r.crop_y0);
    EXPECT_NEAR(tl[0], 0.0, 1e-12);
    EXPECT_NEAR(tl[1], 0.0, 1e-12);
    const auto br = r.to_network(r.crop_x0 + r.crop_w, r.crop_y0 + r.crop_h);
    EXPECT_NEAR(br[0], r.resized_w, 1e-9);
    EXPECT_NEAR(br[1], r.resized_h, 1e-9);
    for (int i = 0; i < 100; ++i) {
        const double sx = testing::uniform(rng, 0, 333), sy = testing::uniform(rng, 0, 517);
        const auto n = r.to_network(sx, sy);
        const auto s = r.to_source(n[0], n[1]);
        EXPECT_NEAR(s[0], sx, 1e-9);
        EXPECT_NEAR(s[1], sy, 1e-9);
    }
}

TEST(PostprocessTest, ConfidentPersonFillsCropOnly) {
    const ResizeRecord r = record_for(120, 90, BBox{30, 20, 80, 70});
    const SegMask m = postprocess(constant_logits(r, -5, 5), r);
    ASSERT_EQ(m.width, 120);
    ASSERT_EQ(m.height, 90);
    for (int y = 0; y < 90; ++y) {
        for (int x = 0; x < 120; ++x) {
            const bool inside = x >= r.crop_x0 && x < r.crop_x0 + r.crop_w && y >= r.crop_y0 && y < r.crop_y0 + r.crop_h;
            EXPECT_EQ(m.at(x, y), inside ? 1 : 0);
        }
    }
    EXPECT_EQ(postprocess(constant_logits(r, 5, -5), r).count(), 0u);
}

TEST(PostprocessTest, ThresholdIsStrict) {
    const ResizeRecord r = record_for(32, 32);
    EXPECT_EQ(postprocess(constant_logits(r, 1, 1), r).count(), 0u);
    EXPECT_EQ(postprocess(constant_logits(r, 1, 1), r, 0.49).count(), 32u * 32u);
}

TEST(PostprocessTest, PaddingIsIgnored) {
    const ResizeRecord r = record_for(50, 100, {}, 70);  // resized 35x70 in a 64x96 grid
    LogitMap lm = constant_logits(r, 5, -5);
    for (int y = 0; y < r.padded_h; ++y) {
        for (int x = 0; x < r.padded_w; ++x) {
            if (y >= r.resized_h || x >= r.resized_w) lm.logits.at(0, 1, y, x) = 50.0f;
        }
    }
    EXPECT_EQ(postprocess(lm, r).count(), 0u);
}

TEST(PostprocessTest, HalfPlaneMapsBack) {
    const ResizeRecord r = record_for(64, 64, {}, 64);
    LogitMap lm = constant_logits(r, 0, 0);
    for (int y = 0; y < 64; ++y) {
        for (int x = 0; x < 32; ++x) lm.logits.at(0, 1, y, x) = 4.0f;
    }
    const SegMask m = postprocess(lm, r);
    for (int y = 0; y < 64; ++y) {
        for (int x = 0; x < 64; ++x) EXPECT_EQ(m.at(x, y), x < 32 ? 1 : 0);
    }
    EXPECT_THROW(postprocess({Tensor(Shape{1, 2, 32, 32}), 1}, r), ShapeError);
}

TEST(SegmentImageTest, DeterministicAcrossThreads) {
    const Model model(random_init(BackboneConfig::tiny(), HeadConfig{}, 4));
    Rng rng(4);
    const Image img = random_image(rng, 90, 70);
    PreprocessOptions opts;
    opts.target_height = 96;
    const int prev = num_threads();
    set_num_threads(1);
    const SegMask a = segment_image(model, img, BBox{10, 5, 70, 60}, opts);
    set_num_threads(4);
    const SegMask b = segment_image(model, img, BBox{10, 5, 70, 60}, opts);
    set_num_threads(prev);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.width, 90);
    EXPECT_EQ(a.height, 70);
    EXPECT_NO_THROW(a.validate());
}

TEST(MergeMasksTest, PixelwiseOr) {
    Rng rng(5);
    const SegMask a = testing::random_mask(rng, 9, 7);
    const SegMask b = testing::random_mask(rng, 9, 7);
    const SegMask m = merge_instance_masks({a, b});
    for (int y = 0; y < 7; ++y) {
        for (int x = 0; x < 9; ++x) EXPECT_EQ(m.at(x, y), a.at(x, y) | b.at(x, y));
    }
    EXPECT_EQ(merge_instance_masks({a}), a);
    EXPECT_EQ(merge_instance_masks({}), SegMask{});
    EXPECT_THROW(merge_instance_masks({a, SegMask(7, 9)}), ShapeError);
}

TEST(BBoxTest, RandomMatchesArithmetic) {
    Rng rng(6);
    for (int i = 0; i < 200; ++i) {
        const int w = testing::uniform_int(rng, 10, 800), h = testing::uniform_int(rng, 10, 800);
        const double x0 = testing::uniform(rng, 0, w - 2), y0 = testing::uniform(rng, 0, h - 2);
        const double x1 = testing::uniform(rng, x0 + 1, w), y1 = testing::uniform(rng, y0 + 1, h);
        const BBox e = enlarge_bbox({x0, y0, x1, y1}, w, h);
        EXPECT_DOUBLE_EQ(e.x0, std::max(0.0, x0 - 0.1 * (x1 - x0)));
        EXPECT_DOUBLE_EQ(e.y0, std::max(0.0, y0 - 0.1 * (y1 - y0)));
        EXPECT_DOUBLE_EQ(e.x1, std::min<double>(w, x1 + 0.1 * (x1 - x0)));
        EXPECT_DOUBLE_EQ(e.y1, std::min<double>(h, y1 + 0.1 * (y1 - y0)));
    }
    EXPECT_EQ(enlarge_bbox({100, 100, 300, 500}, 1000, 1000), (BBox{80, 60, 320, 540}));
}

TEST(SegmentImageTest, GoldenMask) {
    const Model model(random_init(BackboneConfig::tiny(), HeadConfig{}, 77));
    Rng rng(77);
    const Image img = random_image(rng, 80, 60);
    PreprocessOptions opts;
    opts.target_height = 64;
    const SegMask m = segment_image(model, img, {}, opts);
    EXPECT_EQ(segment_image(model, img, {}, opts), m);
    EXPECT_EQ(fnv1a_hex(m.data), "277452467f096265");
}

TEST(MergeMasksTest, DisjointAreasAdd) {
    SegMask a(6, 6), b(6, 6);
    for (int x = 0; x < 6; ++x) {
        a.at(x, 0) = 1;
        b.at(x, 5) = 1;
        b.at(x, 4) = 1;
    }
    EXPECT_EQ(merge_instance_masks({a, b}).count(), a.count() + b.count());
}

}  // namespace
}  // namespace alis
