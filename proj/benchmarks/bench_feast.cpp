#include "feast/combiners.hpp"
#include "feast/data_model.hpp"
#include "feast/digitizer.hpp"
#include "feast/isotonic.hpp"
#include "feast/nmds.hpp"
#include "feast/pca.hpp"
#include "feast/tsne.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace feast;

namespace {

Eigen::MatrixXd random_points(int n, int d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 3.0);
    Eigen::MatrixXd X(n, d);
    for (int i = 0; i < n; ++i)
        for (int c = 0; c < d; ++c) X(i, c) = gauss(rng);
    return X;
}

DistanceMatrix matrix_of(const Eigen::MatrixXd& X) {
    DistanceMatrix m;
    const auto n = X.rows();
    for (Eigen::Index i = 0; i < n; ++i) m.ids.push_back(i);
    m.d = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j)
            m.d(i, j) = m.d(j, i) = (X.row(i) - X.row(j)).norm();
    return m;
}

void BM_pava(benchmark::State& state) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> val(-1.0, 1.0);
    std::vector<double> values(static_cast<std::size_t>(state.range(0)));
    for (auto& v : values) v = val(rng);
    for (auto _ : state) benchmark::DoNotOptimize(pava_isotonic(values));
}
BENCHMARK(BM_pava)->Arg(1000)->Arg(10000);

void BM_nmds_flavor_subset(benchmark::State& state) {
    auto m = matrix_of(random_points(108, 2, 2));
    for (auto _ : state) {
        auto res = nmds_smacof(m, {.n_init = 10, .max_iter = 500, .eps = 1e-4, .seed = 1});
        benchmark::DoNotOptimize(res.stress);
    }
}
BENCHMARK(BM_nmds_flavor_subset)->Unit(benchmark::kMillisecond);

void BM_tsne_150(benchmark::State& state) {
    EmbeddingTable t;
    t.vectors = random_points(150, 10, 3);
    for (int i = 0; i < 150; ++i) t.ids.push_back(i);
    for (auto _ : state) {
        auto res = tsne_reduce(t, {.perplexity = 30.0, .max_iters = 500,
                                   .exaggeration_iters = 125, .seed = 1});
        benchmark::DoNotOptimize(res.kl_final);
    }
}
BENCHMARK(BM_tsne_150)->Unit(benchmark::kMillisecond);

void BM_pca_reduce(benchmark::State& state) {
    EmbeddingTable t;
    t.vectors = random_points(static_cast<int>(state.range(0)), 64, 4);
    for (int i = 0; i < state.range(0); ++i) t.ids.push_back(i);
    for (auto _ : state) benchmark::DoNotOptimize(pca_reduce(t).points);
}
BENCHMARK(BM_pca_reduce)->Arg(108)->Arg(1000);

void BM_cca_align(benchmark::State& state) {
    Embedding2D a, b;
    a.points = random_points(108, 2, 5);
    b.points = random_points(108, 2, 6);
    for (int i = 0; i < 108; ++i) {
        a.ids.push_back(i);
        b.ids.push_back(i);
    }
    for (auto _ : state) benchmark::DoNotOptimize(cca_align(a, b).correlations);
}
BENCHMARK(BM_cca_align);

void BM_triplets_from_matrix(benchmark::State& state) {
    auto m = matrix_of(random_points(static_cast<int>(state.range(0)), 2, 7));
    for (auto _ : state) benchmark::DoNotOptimize(triplets_from_matrix(m).size());
}
BENCHMARK(BM_triplets_from_matrix)->Arg(50)->Arg(108);

void BM_harris(benchmark::State& state) {
    RasterImage img = RasterImage::filled(800, 1000, 20, 20, 20);
    for (int y = 100; y < 900; ++y)
        for (int x = 100; x < 700; ++x) {
            auto* p = img.at(x, y);
            p[0] = p[1] = p[2] = 255;
        }
    for (auto _ : state) benchmark::DoNotOptimize(harris_corners(img).size());
}
BENCHMARK(BM_harris)->Unit(benchmark::kMillisecond);

void BM_rectify(benchmark::State& state) {
    RasterImage img = RasterImage::filled(800, 1000, 128, 128, 128);
    SheetGeometry g;
    g.corners = {Eigen::Vector2d(60, 60), Eigen::Vector2d(720, 80),
                 Eigen::Vector2d(700, 930), Eigen::Vector2d(80, 910)};
    Eigen::Matrix3d H = homography_from_corners(g, 1050, 1485);
    for (auto _ : state) benchmark::DoNotOptimize(rectify(img, H, 1050, 1485).pixels.size());
}
BENCHMARK(BM_rectify)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
