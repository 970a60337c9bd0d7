#include "alis/seghead.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "alis/error.hpp"

namespace alis {

namespace {

bool is_pow2(int v) { return v >= 1 && (v & (v - 1)) == 0; }

int log2_exact(int v) {
    int k = 0;
    while ((1 << k) < v) ++k;
    return k;
}

std::size_t level_index(const BackboneConfig& bb, int stride) {
    const auto it = std::find(bb.emitted_strides.begin(), bb.emitted_strides.end(), stride);
    if (it == bb.emitted_strides.end()) {
        throw DomainError("stride " + std::to_string(stride) + " is not an emitted level");
    }
    return static_cast<std::size_t>(it - bb.emitted_strides.begin());
}

void check_logits(const Tensor& t) {
    if (t.batch() != 1) throw UnsupportedError("logit maps must have batch 1");
    if (t.channels() != 2) {
        throw ShapeError("logit maps need 2 channels, got " + std::to_string(t.channels()));
    }
}

double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Stable ranking of scores: highest first, ties by ascending index.
std::vector<std::size_t> rank_desc(const std::vector<float>& score, std::size_t keep) {
    std::vector<std::size_t> idx(score.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    keep = std::min(keep, idx.size());
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(keep), idx.end(),
                      [&](std::size_t a, std::size_t b) {
                          if (score[a] != score[b]) return score[a] > score[b];
                          return a < b;
                      });
    idx.resize(keep);
    return idx;
}

int nearest_cell(double u, int size) {
    return std::clamp(static_cast<int>(std::floor(u * size)), 0, size - 1);
}

}  // namespace

void HeadConfig::validate(const BackboneConfig& bb) const {
    if (coarse_channels < 1) throw DomainError("coarse channels must be >= 1");
    if (num_classes != 2) throw DomainError("only two classes are supported");
    if (!is_pow2(aggregation_stride)) throw DomainError("aggregation stride must be a power of two");
    level_index(bb, aggregation_stride);
    level_index(bb, fine_stride);
    const PointRendConfig& pr = pointrend;
    if (pr.points < 1) throw DomainError("point count must be >= 1");
    if (pr.steps < 0) throw DomainError("subdivision steps must be >= 0");
    if ((1 << std::min(pr.steps, 30)) > aggregation_stride) {
        throw DomainError("subdivision steps exceed the aggregation stride");
    }
    if (pr.oversample < 1) throw DomainError("oversample ratio must be >= 1");
    if (!(pr.importance >= 0.0 && pr.importance <= 1.0)) {
        throw DomainError("importance ratio must lie in [0, 1]");
    }
    for (int h : pr.mlp_hidden) {
        if (h < 1) throw DomainError("point MLP widths must be >= 1");
    }
}

std::vector<ConvSpec> head_conv_specs(const HeadConfig& cfg, const BackboneConfig& bb) {
    bb.validate();
    cfg.validate(bb);
    const auto chans = bb.level_channels();
    std::vector<ConvSpec> specs;
    for (std::size_t i = 0; i < chans.size(); ++i) {
        const int s = bb.emitted_strides[i];
        const int stride = s < cfg.aggregation_stride ? cfg.aggregation_stride / s : 1;
        specs.push_back({"head.lateral" + std::to_string(i), cfg.coarse_channels, chans[i], 3,
                         stride, 1, 1, true});
    }
    specs.push_back({"head.coarse", cfg.num_classes, cfg.coarse_channels, 1, 1, 0, 1, false});
    return specs;
}

std::vector<LinearSpec> head_linear_specs(const HeadConfig& cfg, const BackboneConfig& bb) {
    bb.validate();
    cfg.validate(bb);
    const int fine_ch = bb.level_channels()[level_index(bb, cfg.fine_stride)];
    std::vector<LinearSpec> specs;
    int in = fine_ch + cfg.num_classes;
    std::size_t j = 0;
    for (int h : cfg.pointrend.mlp_hidden) {
        specs.push_back({"head.point.fc" + std::to_string(j++), h, in});
        in = h;
    }
    specs.push_back({"head.point.fc" + std::to_string(j), cfg.num_classes, in});
    return specs;
}

std::array<float, 2> PointHead::forward(std::span<const float> x) const {
    if (layers.empty()) throw ShapeError("point head has no layers");
    std::vector<float> h(x.begin(), x.end());
    for (std::size_t i = 0; i < layers.size(); ++i) {
        h = linear(h, layers[i]);
        if (i + 1 < layers.size()) {
            for (float& v : h) v = std::max(v, 0.0f);
        }
    }
    if (h.size() != 2) throw ShapeError("point head must end in 2 outputs");
    return {h[0], h[1]};
}

SegHead build_head(const HeadConfig& cfg, const BackboneConfig& bb, const WeightMap& weights) {
    const auto convs = head_conv_specs(cfg, bb);
    SegHead head;
    head.cfg_ = cfg;
    head.level_strides_ = bb.emitted_strides;
    for (std::size_t i = 0; i + 1 < convs.size(); ++i) {
        head.laterals_.push_back(load_conv(weights, convs[i]));
        const int s = bb.emitted_strides[i];
        head.upsamples_.push_back(s > cfg.aggregation_stride ? log2_exact(s / cfg.aggregation_stride)
                                                            : 0);
    }
    head.coarse_ = load_conv(weights, convs.back());
    for (const auto& spec : head_linear_specs(cfg, bb)) {
        head.point_head_.layers.push_back(load_linear(weights, spec));
    }
    head.fine_index_ = level_index(bb, cfg.fine_stride);
    return head;
}

Tensor SegHead::aggregate(const std::vector<Tensor>& levels, ActivationRecorder* rec) const {
    if (levels.size() != laterals_.size()) {
        throw ShapeError("head expects " + std::to_string(laterals_.size()) + " levels, got " +
                         std::to_string(levels.size()));
    }
    Tensor sum;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        Tensor y = laterals_[i].forward(levels[i], rec);
        for (int u = 0; u < upsamples_[i]; ++u) y = upsample_2x(y);
        sum = i == 0 ? std::move(y) : add(sum, y);
    }
    return sum;
}

LogitMap SegHead::coarse_segment(const Tensor& coarse, ActivationRecorder* rec) const {
    return {coarse_.forward(coarse, rec), cfg_.aggregation_stride};
}

const Tensor& SegHead::fine_features(const std::vector<Tensor>& levels) const {
    if (fine_index_ >= levels.size()) throw ShapeError("fine level missing");
    return levels[fine_index_];
}

std::size_t SegHead::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : laterals_) n += l.weights().kernel.size() + l.weights().bias.size();
    n += coarse_.weights().kernel.size() + coarse_.weights().bias.size();
    for (const auto& l : point_head_.layers) n += l.weight.size() + l.bias.size();
    return n;
}

float uncertainty(std::array<float, 2> logits) { return -std::fabs(logits[1] - logits[0]); }

PointSet select_top_uncertain(const LogitMap& lm, int n) {
    check_logits(lm.logits);
    if (n < 0) throw DomainError("point count must be non-negative");
    const int h = lm.logits.height();
    const int w = lm.logits.width();
    const auto bg = lm.logits.plane(0, 0);
    const auto fg = lm.logits.plane(0, 1);
    std::vector<float> score(bg.size());
    for (std::size_t i = 0; i < score.size(); ++i) score[i] = uncertainty({bg[i], fg[i]});
    PointSet out;
    for (std::size_t i : rank_desc(score, static_cast<std::size_t>(n))) {
        const int y = static_cast<int>(i / w);
        const int x = static_cast<int>(i % w);
        out.push_back({(y + 0.5) / h, (x + 0.5) / w});
    }
    return out;
}

PointSet sample_train_points(const LogitMap& lm, int n, int oversample, double importance,
                             std::uint64_t seed) {
    check_logits(lm.logits);
    if (n < 0) throw DomainError("point count must be non-negative");
    if (oversample < 1) throw DomainError("oversample ratio must be >= 1");
    if (!(importance >= 0.0 && importance <= 1.0)) {
        throw DomainError("importance ratio must lie in [0, 1]");
    }
    std::mt19937_64 rng(seed);
    PointSet candidates;
    const std::size_t n_cand = static_cast<std::size_t>(oversample) * n;
    for (std::size_t i = 0; i < n_cand; ++i) {
        const double y = uniform01(rng);
        candidates.push_back({y, uniform01(rng)});
    }
    const PointSet sampled = bilinear_point_sample(lm.logits, candidates);
    std::vector<float> score(n_cand);
    for (std::size_t i = 0; i < n_cand; ++i) {
        const auto l = sampled.payload(i);
        score[i] = uncertainty({l[0], l[1]});
    }
    const auto n_uncertain = static_cast<std::size_t>(importance * n);
    PointSet out;
    for (std::size_t i : rank_desc(score, n_uncertain)) out.push_back(candidates[i]);
    while (out.size() < static_cast<std::size_t>(n)) {
        const double y = uniform01(rng);
        out.push_back({y, uniform01(rng)});
    }
    return out;
}

PointSet refine_points(const LogitMap& logits, const Tensor& fine, const PointSet& pts,
                       const PointHead& head) {
    check_logits(logits.logits);
    const auto fine_ch = static_cast<std::size_t>(fine.channels());
    if (static_cast<std::size_t>(head.in_features()) != fine_ch + 2) {
        throw ShapeError("point head takes " + std::to_string(head.in_features()) +
                         " features, fine level gives " + std::to_string(fine_ch) + " + 2");
    }
    const PointSet feats = bilinear_point_sample(fine, pts);
    const PointSet coarse = bilinear_point_sample(logits.logits, pts);
    PointSet out(pts.points());
    out.set_payload_width(2);
    const auto n = static_cast<std::ptrdiff_t>(pts.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        std::vector<float> x(fine_ch + 2);
        std::copy(feats.payload(k).begin(), feats.payload(k).end(), x.begin());
        x[fine_ch] = coarse.payload(k)[0];
        x[fine_ch + 1] = coarse.payload(k)[1];
        const auto r = head.forward(x);
        out.payload(k)[0] = r[0];
        out.payload(k)[1] = r[1];
    }
    return out;
}

Tensor upsample_logits_to(const Tensor& logits, int out_h, int out_w) {
    Tensor cur = logits;
    while (cur.height() * 2 <= out_h && cur.width() * 2 <= out_w &&
           out_h % (cur.height() * 2) == 0 && out_w % (cur.width() * 2) == 0 &&
           out_h / cur.height() == out_w / cur.width()) {
        cur = upsample_2x(cur);
    }
    if (cur.height() != out_h || cur.width() != out_w) cur = resize_bilinear(cur, out_h, out_w);
    return cur;
}

LogitMap pointrend_infer(const LogitMap& coarse, const Tensor& fine, const PointRendConfig& cfg,
                         const PointHead& head) {
    check_logits(coarse.logits);
    if (cfg.steps < 0) throw DomainError("subdivision steps must be >= 0");
    if ((coarse.stride >> std::min(cfg.steps, 30)) << cfg.steps != coarse.stride) {
        throw DomainError("subdivision steps exceed the logit stride");
    }
    const int out_h = coarse.logits.height() * coarse.stride;
    const int out_w = coarse.logits.width() * coarse.stride;
    LogitMap cur = coarse;
    for (int step = 0; step < cfg.steps; ++step) {
        cur.logits = upsample_2x(cur.logits);
        cur.stride /= 2;
        const PointSet pts = select_top_uncertain(cur, cfg.points);
        const PointSet refined = refine_points(cur, fine, pts, head);
        const int h = cur.logits.height();
        const int w = cur.logits.width();
        for (std::size_t i = 0; i < refined.size(); ++i) {
            const int y = nearest_cell(refined[i].y, h);
            const int x = nearest_cell(refined[i].x, w);
            cur.logits.at(0, 0, y, x) = refined.payload(i)[0];
            cur.logits.at(0, 1, y, x) = refined.payload(i)[1];
        }
    }
    cur.logits = upsample_logits_to(cur.logits, out_h, out_w);
    cur.stride = 1;
    return cur;
}

double cross_entropy2(std::array<float, 2> logits, int label) {
    if (!std::isfinite(logits[0]) || !std::isfinite(logits[1])) {
        throw DomainError("non-finite logits");
    }
    const double d = static_cast<double>(logits[label]) - logits[1 - label];
    return d >= 0.0 ? std::log1p(std::exp(-d)) : -d + std::log1p(std::exp(d));
}

double seg_loss(const LogitMap& pred, const SegMask& gt) {
    check_logits(pred.logits);
    gt.validate();
    if (gt.width == 0 || gt.height == 0) throw ShapeError("empty ground-truth mask");
    const int h = pred.logits.height();
    const int w = pred.logits.width();
    double sum = 0.0;
    for (int y = 0; y < h; ++y) {
        const int gy = static_cast<int>((2LL * y + 1) * gt.height / (2LL * h));
        for (int x = 0; x < w; ++x) {
            const int gx = static_cast<int>((2LL * x + 1) * gt.width / (2LL * w));
            sum += cross_entropy2({pred.logits.at(0, 0, y, x), pred.logits.at(0, 1, y, x)},
                                  gt.at(gx, gy));
        }
    }
    return sum / (static_cast<double>(h) * w);
}

double pointrend_loss(const PointSet& refined, const SegMask& gt) {
    if (refined.empty()) return 0.0;
    if (refined.payload_width() != 2) throw ShapeError("refined points need 2 logits each");
    refined.validate();
    gt.validate();
    if (gt.width == 0 || gt.height == 0) throw ShapeError("empty ground-truth mask");
    double sum = 0.0;
    for (std::size_t i = 0; i < refined.size(); ++i) {
        const int gy = nearest_cell(refined[i].y, gt.height);
        const int gx = nearest_cell(refined[i].x, gt.width);
        const auto l = refined.payload(i);
        sum += cross_entropy2({l[0], l[1]}, gt.at(gx, gy));
    }
    return sum;
}

}  // namespace alis
