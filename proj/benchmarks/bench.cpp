// Microbenchmarks for the hot kernels: splatting, projection, blurring, and
// one reverse-diffusion step. Sizes mirror the desk-scale configurations.
#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "grrecon/diffusion.hpp"
#include "grrecon/gaussian_cloud.hpp"
#include "grrecon/guidance.hpp"
#include "grrecon/projector.hpp"
#include "grrecon/rasterizer.hpp"
#include "grrecon/rng.hpp"
#include "grrecon/types.hpp"

namespace {

using namespace grrecon;

GaussianCloud random_cloud(std::size_t n, const Grid& grid, std::uint64_t seed) {
    std::mt19937_64 rng = make_engine(seed);
    std::uniform_real_distribution<double> ux(0.0, grid.dims[0] - 1.0);
    std::uniform_real_distribution<double> uy(0.0, grid.dims[1] - 1.0);
    std::uniform_real_distribution<double> uz(0.0, grid.dims[2] - 1.0);
    std::uniform_real_distribution<double> us(0.8, 2.0);
    std::uniform_real_distribution<double> ui(0.1, 1.0);
    GaussianCloud cloud;
    for (std::size_t i = 0; i < n; ++i)
        cloud.push_back({ux(rng), uy(rng), uz(rng)}, us(rng), ui(rng));
    return cloud;
}

Volume random_volume(const Grid& grid, std::uint64_t seed) {
    std::mt19937_64 rng = make_engine(seed);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    Volume vol(grid);
    for (float& v : vol.data)
        v = u(rng);
    return vol;
}

void BM_Rasterize(benchmark::State& state) {
    Grid grid(32, 32, 32);
    GaussianCloud cloud = random_cloud(static_cast<std::size_t>(state.range(0)), grid, 1);
    for (auto _ : state)
        benchmark::DoNotOptimize(rasterize_dense(cloud, grid, true));
}
BENCHMARK(BM_Rasterize)->Arg(500)->Arg(2000)->Arg(5000);

void BM_RasterizeBackward(benchmark::State& state) {
    Grid grid(32, 32, 32);
    GaussianCloud cloud = random_cloud(static_cast<std::size_t>(state.range(0)), grid, 2);
    std::vector<double> upstream(grid.voxel_count(), 1.0);
    for (auto _ : state)
        benchmark::DoNotOptimize(rasterize_backward(cloud, grid, upstream.data()));
}
BENCHMARK(BM_RasterizeBackward)->Arg(500)->Arg(2000)->Arg(5000);

void BM_ForwardProject(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    Grid grid(n, n, n);
    Volume vol = random_volume(grid, 3);
    ForwardModel model = ForwardModel::for_grid(grid);
    for (auto _ : state)
        benchmark::DoNotOptimize(forward_project(vol, model));
}
BENCHMARK(BM_ForwardProject)->Arg(32)->Arg(64);

void BM_BackProject(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    Grid grid(n, n, n);
    ForwardModel model = ForwardModel::for_grid(grid);
    Sinogram y = forward_project(random_volume(grid, 4), model);
    for (auto _ : state)
        benchmark::DoNotOptimize(back_project(y, model, grid));
}
BENCHMARK(BM_BackProject)->Arg(32)->Arg(64);

void BM_GaussianBlur(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    Grid grid(n, n, n);
    Volume vol = random_volume(grid, 5);
    for (auto _ : state)
        benchmark::DoNotOptimize(gaussian_blur3d(vol, 2.0, 3));
}
BENCHMARK(BM_GaussianBlur)->Arg(32)->Arg(96);

void BM_ReverseStep(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    Grid grid(n, n, n);
    DiffusionSchedule sched = build_schedule(200);
    GmmPrior prior{{GmmComponent{}}};
    GmmNoisePredictor denoiser(prior);
    Volume x = random_volume(grid, 6);
    for (auto _ : state)
        benchmark::DoNotOptimize(reverse_step(x, 100, denoiser, sched, 7));
}
BENCHMARK(BM_ReverseStep)->Arg(32)->Arg(96);

}  // namespace

BENCHMARK_MAIN();
