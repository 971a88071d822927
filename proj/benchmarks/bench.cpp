#include <benchmark/benchmark.h>

#include <numeric>
#include <random>

#include "eegret/blur.hpp"
#include "eegret/encoder.hpp"
#include "eegret/infonce.hpp"
#include "eegret/recon_metrics.hpp"
#include "eegret/retrieval.hpp"

using namespace eegret;

namespace {

RowMatrix<float> gaussian(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<float> nd;
    RowMatrix<float> m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = nd(gen);
    return m;
}

Image noise_image(int side, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> ud;
    Image img(side, side);
    for (double& v : img.pixels) v = ud(gen);
    return img;
}

void BM_HungarianAssign(benchmark::State& state) {
    const auto n = state.range(0);
    std::vector<int> labels(static_cast<std::size_t>(n));
    std::iota(labels.begin(), labels.end(), 0);
    const SimilarityMatrix s{gaussian(n, n, 1).cast<double>(), labels, labels};
    for (auto _ : state) benchmark::DoNotOptimize(hungarian_assign(s));
}
BENCHMARK(BM_HungarianAssign)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_HungarianTop5(benchmark::State& state) {
    std::vector<int> labels(200);
    std::iota(labels.begin(), labels.end(), 0);
    const SimilarityMatrix s{gaussian(200, 200, 2).cast<double>(), labels, labels};
    for (auto _ : state) benchmark::DoNotOptimize(hungarian_top_k(s, 5));
}
BENCHMARK(BM_HungarianTop5)->Unit(benchmark::kMillisecond);

void BM_GaussianBlur(benchmark::State& state) {
    const Image img = noise_image(224, 3);
    const int k = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(gaussian_blur(img, k));
}
BENCHMARK(BM_GaussianBlur)->Arg(3)->Arg(15)->Arg(63)->Unit(benchmark::kMillisecond);

void BM_BlurPyramid(benchmark::State& state) {
    const Image img = noise_image(224, 4);
    for (auto _ : state) benchmark::DoNotOptimize(build_blur_pyramid(img, BlurSpec{}));
}
BENCHMARK(BM_BlurPyramid)->Unit(benchmark::kMillisecond);

void BM_Ssim(benchmark::State& state) {
    const Image a = noise_image(224, 5), b = noise_image(224, 6);
    for (auto _ : state) benchmark::DoNotOptimize(ssim(a, b));
}
BENCHMARK(BM_Ssim)->Unit(benchmark::kMillisecond);

struct EncoderFixture {
    EncoderDims dims;
    EncoderParams<float> params;
    RowMatrix<float> eeg, blur, evnet;
    explicit EncoderFixture(Eigen::Index batch)
        : params(init_params<float>(dims, 7)),
          eeg(gaussian(batch, static_cast<Eigen::Index>(dims.channels * dims.timepoints), 8)),
          blur(gaussian(batch, static_cast<Eigen::Index>(dims.n_blur * dims.feature_dim), 9)),
          evnet(gaussian(batch, static_cast<Eigen::Index>(dims.feature_dim), 10)) {}
};

void BM_EncoderForwardEval(benchmark::State& state) {
    EncoderFixture f(state.range(0));
    const ForwardMode eval{Mode::eval, 0, false};
    for (auto _ : state) {
        benchmark::DoNotOptimize(eeg_forward(f.params, f.eeg, eval));
        benchmark::DoNotOptimize(visual_forward(f.params, f.blur, &f.evnet, eval));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EncoderForwardEval)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_EncoderTrainStep(benchmark::State& state) {
    EncoderFixture f(state.range(0));
    const ForwardMode train{Mode::train, 11, false};
    for (auto _ : state) {
        EegCache<float> ec;
        VisualCache<float> vc;
        const RowMatrix<float> z = eeg_forward(f.params, f.eeg, train, &ec);
        const RowMatrix<float> v = visual_forward(f.params, f.blur, &f.evnet, train, &vc);
        const auto loss = infonce_loss<float>(z, v);
        benchmark::DoNotOptimize(backward(f.params, ec, vc, loss.grad_z, loss.grad_v));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EncoderTrainStep)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_InfoNce(benchmark::State& state) {
    const auto n = state.range(0);
    const RowMatrix<float> z = gaussian(n, 1024, 12), v = gaussian(n, 1024, 13);
    for (auto _ : state) benchmark::DoNotOptimize(infonce_loss<float>(z, v));
}
BENCHMARK(BM_InfoNce)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_CosineTopK(benchmark::State& state) {
    std::vector<int> labels(200);
    std::iota(labels.begin(), labels.end(), 0);
    const RowMatrix<double> e = gaussian(200, 1024, 14).cast<double>(), v = gaussian(200, 1024, 15).cast<double>();
    for (auto _ : state) benchmark::DoNotOptimize(top_k_accuracy(cosine_matrix(e, v, labels, labels), 5));
}
BENCHMARK(BM_CosineTopK)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
