#include <benchmark/benchmark.h>

#include <random>

#include "holotrack/detect3d.hpp"
#include "holotrack/evaluate.hpp"
#include "holotrack/optics.hpp"
#include "holotrack/segment.hpp"
#include "holotrack/simulate.hpp"
#include "holotrack/tiling.hpp"

using namespace holotrack;

namespace {

OpticalConfig sized(int nx, int ny) {
    OpticalConfig c;
    c.nx = nx;
    c.ny = ny;
    return c;
}

IntensityImage hologram(const OpticalConfig& c, int particles) {
    const auto field = sample_field(c, particles, {}, 1, "bench");
    return normalize_by_mean(grid_cast<double>(render_hologram(field, c)));
}

}  // namespace

// One reconstructed plane from a cached spectrum; the argument pair is nx, ny.
void BM_RefocusPlane(benchmark::State& state) {
    const auto c = sized(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
    const Refocuser r(hologram(c, 20), c);
    auto ws = r.make_workspace();
    double z = c.z_min;
    for (auto _ : state) {
        benchmark::DoNotOptimize(r.reconstruct(z, ws));
        z = z + 1000.0 > c.z_max ? c.z_min : z + 1000.0;
    }
    state.SetItemsProcessed(state.iterations() * c.nx * c.ny);
}
BENCHMARK(BM_RefocusPlane)->Args({256, 256})->Args({512, 256})->Args({1024, 768})->Args({2048, 768})
    ->Unit(benchmark::kMillisecond);

void BM_ReconstructPlane(benchmark::State& state) {
    const auto c = sized(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
    const auto h = hologram(c, 20);
    for (auto _ : state) benchmark::DoNotOptimize(reconstruct_plane(h, 50000.0, c));
}
BENCHMARK(BM_ReconstructPlane)->Args({512, 512})->Args({1024, 768})->Unit(benchmark::kMillisecond);

void BM_RenderHologram(benchmark::State& state) {
    const auto c = sized(512, 512);
    const auto field = sample_field(c, static_cast<int>(state.range(0)), {}, 3, "bench");
    for (auto _ : state) benchmark::DoNotOptimize(render_hologram(field, c));
}
BENCHMARK(BM_RenderHologram)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_ReassembleTiles(benchmark::State& state) {
    const auto grid = build_grid(1024, 768, {512, 128}, true);
    const Grid<float> tile(512, 512, 0.5f);
    for (auto _ : state) {
        TileAccumulator acc(grid);
        for (std::size_t t = 0; t < grid.size(); ++t) acc.add(t, tile);
        benchmark::DoNotOptimize(acc.finish());
    }
}
BENCHMARK(BM_ReassembleTiles)->Unit(benchmark::kMillisecond);

void BM_LeaderCluster(benchmark::State& state) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 10000.0);
    std::vector<Detection> dets(static_cast<std::size_t>(state.range(0)));
    for (std::size_t i = 0; i < dets.size(); ++i) {
        dets[i].x = u(rng);
        dets[i].y = u(rng);
        dets[i].z = u(rng) * 10;
        dets[i].d = 30;
        dets[i].plane_index = static_cast<int>(i % 1000);
    }
    for (auto _ : state) benchmark::DoNotOptimize(leader_cluster(dets, {1000.0, {1, 1, 1, 1}}));
}
BENCHMARK(BM_LeaderCluster)->Arg(1000)->Arg(10000);

void BM_PairParticles(benchmark::State& state) {
    const auto c = sized(1024, 768);
    const auto a = sample_field(c, static_cast<int>(state.range(0)), {}, 1, "a").particles;
    const auto b = sample_field(c, static_cast<int>(state.range(0)), {}, 2, "b").particles;
    for (auto _ : state) benchmark::DoNotOptimize(pair_particles(a, b));
}
BENCHMARK(BM_PairParticles)->Arg(50)->Arg(500);

void BM_OracleHologram(benchmark::State& state) {
    auto c = sized(1024, 768);
    c.n_planes = 200;
    const auto field = sample_field(c, 50, {}, 4, "bench");
    const auto img = grid_cast<double>(render_hologram(field, c));
    const OracleSegmenter seg(field, c);
    PipelineOptions o;
    for (auto _ : state) benchmark::DoNotOptimize(process_hologram(img, "bench", c, seg, o));
}
BENCHMARK(BM_OracleHologram)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
