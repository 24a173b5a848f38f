#include <benchmark/benchmark.h>

#include <random>

#include "diglab/artifact.hpp"
#include "diglab/session.hpp"
#include "diglab/sim.hpp"
#include "diglab/surface_mesher.hpp"
#include "diglab/voxel_grid.hpp"

using namespace diglab;

namespace {

const ArtifactSpec& gold_mask() {
    static const ArtifactSpec spec = builtin_relics()[1];
    return spec;
}

VoxelGrid fresh_grid() { return init_grid(gold_mask().clod_edge, gold_mask().cell_size, gold_mask().geometry); }

Pose random_pose(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-0.95, 0.95);
    std::uniform_real_distribution<double> a(0.0, 6.283185307179586);
    return {{u(rng), u(rng), u(rng)}, Quat::from_axis_angle({u(rng), u(rng), 1.0}, a(rng))};
}

void BM_InitGrid(benchmark::State& state) {
    for (auto _ : state) {
        benchmark::DoNotOptimize(fresh_grid());
    }
}
BENCHMARK(BM_InitGrid)->Unit(benchmark::kMillisecond);

void BM_Carve(benchmark::State& state) {
    const Tool& tool = gold_mask().tools[static_cast<std::size_t>(state.range(0))];
    VoxelGrid grid = fresh_grid();
    std::mt19937_64 rng(1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(grid.carve(tool.brush, random_pose(rng)));
    }
    state.SetLabel(tool.name);
}
BENCHMARK(BM_Carve)->Arg(0)->Arg(1);

void BM_ExtractChunk(benchmark::State& state) {
    VoxelGrid grid = fresh_grid();
    std::mt19937_64 rng(2);
    for (int n = 0; n < 2000; ++n) {
        grid.carve(gold_mask().tools[0].brush, random_pose(rng));
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(extract_chunk(grid, {2, 3, 3}));
    }
}
BENCHMARK(BM_ExtractChunk)->Unit(benchmark::kMicrosecond);

void BM_ExtractAll(benchmark::State& state) {
    const VoxelGrid grid = fresh_grid();
    for (auto _ : state) {
        benchmark::DoNotOptimize(extract_all(grid));
    }
}
BENCHMARK(BM_ExtractAll)->Unit(benchmark::kMillisecond);

/// One stroke plus the incremental re-mesh that a live session does per stroke.
void BM_StrokeRemesh(benchmark::State& state) {
    VoxelGrid grid = fresh_grid();
    ChunkMesher mesher(grid.shape());
    mesher.remesh_dirty(grid);
    std::mt19937_64 rng(3);
    const auto workers = static_cast<unsigned>(state.range(0));
    for (auto _ : state) {
        grid.carve(gold_mask().tools[1].brush, random_pose(rng));
        benchmark::DoNotOptimize(mesher.remesh_dirty(grid, workers));
    }
}
BENCHMARK(BM_StrokeRemesh)->Arg(1)->Arg(4)->Unit(benchmark::kMicrosecond);

void BM_MeshArtifact(benchmark::State& state) {
    const VoxelGrid grid = fresh_grid();
    for (auto _ : state) {
        benchmark::DoNotOptimize(mesh_artifact(*gold_mask().geometry, grid.shape()));
    }
}
BENCHMARK(BM_MeshArtifact)->Unit(benchmark::kMillisecond);

void BM_RandomBotSession(benchmark::State& state) {
    std::uint64_t seed = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(run_bot(gold_mask(), BotPolicy{RandomCarver{}, seed++}));
    }
}
BENCHMARK(BM_RandomBotSession)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
