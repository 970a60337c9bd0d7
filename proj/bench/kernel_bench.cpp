// Serial reference kernels against the OpenMP ones. Thread count is the
// benchmark argument for the parallel variants.

#include <random>

#include <benchmark/benchmark.h>

#include "alis/nn_ops.hpp"
#include "alis/parallel.hpp"
#include "alis/quant.hpp"
#include "alis/tensor.hpp"

namespace {

using namespace alis;

Tensor random_tensor(Shape s, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> d(-1.0f, 1.0f);
    Tensor t(s);
    for (float& v : t.data()) v = d(rng);
    return t;
}

ConvWeights random_conv(int out, int in, int k, int groups, std::uint64_t seed) {
    ConvWeights w = make_conv_weights(out, in, k, 1, k / 2, groups);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> d(-0.2f, 0.2f);
    for (float& v : w.kernel) v = d(rng);
    for (float& v : w.bias) v = d(rng);
    return w;
}

// Pointwise 32->64 and depthwise 3x3 on 64 channels at 128x96.
const Tensor& input32() {
    static const Tensor t = random_tensor(Shape{1, 32, 128, 96}, 1);
    return t;
}
const Tensor& input64() {
    static const Tensor t = random_tensor(Shape{1, 64, 128, 96}, 2);
    return t;
}

void BM_PointwiseRef(benchmark::State& st) {
    const ConvWeights w = random_conv(64, 32, 1, 1, 3);
    for (auto _ : st) benchmark::DoNotOptimize(ref::conv2d(input32(), w));
}
void BM_PointwiseOmp(benchmark::State& st) {
    set_num_threads(static_cast<int>(st.range(0)));
    const ConvWeights w = random_conv(64, 32, 1, 1, 3);
    for (auto _ : st) benchmark::DoNotOptimize(conv2d(input32(), w));
}
void BM_DepthwiseRef(benchmark::State& st) {
    const ConvWeights w = random_conv(64, 64, 3, 64, 4);
    for (auto _ : st) benchmark::DoNotOptimize(ref::conv2d(input64(), w));
}
void BM_DepthwiseOmp(benchmark::State& st) {
    set_num_threads(static_cast<int>(st.range(0)));
    const ConvWeights w = random_conv(64, 64, 3, 64, 4);
    for (auto _ : st) benchmark::DoNotOptimize(conv2d(input64(), w));
}
void BM_QConvRef(benchmark::State& st) {
    const QuantParams qp = compute_qparams(observe({}, input32()));
    const QuantTensor x = quantize(input32(), qp);
    const QuantConvWeights w = quantize_conv_weights(random_conv(64, 32, 3, 1, 5), qp);
    for (auto _ : st) benchmark::DoNotOptimize(ref::qconv2d(x, w, qp));
}
void BM_QConvOmp(benchmark::State& st) {
    set_num_threads(static_cast<int>(st.range(0)));
    const QuantParams qp = compute_qparams(observe({}, input32()));
    const QuantTensor x = quantize(input32(), qp);
    const QuantConvWeights w = quantize_conv_weights(random_conv(64, 32, 3, 1, 5), qp);
    for (auto _ : st) benchmark::DoNotOptimize(qconv2d(x, w, qp));
}
void BM_ResizeRef(benchmark::State& st) {
    for (auto _ : st) benchmark::DoNotOptimize(ref::resize_bilinear(input32(), 256, 192));
}
void BM_ResizeOmp(benchmark::State& st) {
    set_num_threads(static_cast<int>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(resize_bilinear(input32(), 256, 192));
}

BENCHMARK(BM_PointwiseRef)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PointwiseOmp)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DepthwiseRef)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DepthwiseOmp)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_QConvRef)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_QConvOmp)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ResizeRef)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ResizeOmp)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
