// Serial reference loops against the OpenMP kernels.

#include <benchmark/benchmark.h>

#include <random>

#include "capvertex/energy.hpp"
#include "capvertex/graph_solver.hpp"
#include "capvertex/seed.hpp"

using namespace capvertex;

namespace {

KernelMode mode_of(const benchmark::State& state) {
  return state.range(1) == 0 ? KernelMode::Serial : KernelMode::Parallel;
}

void BM_GraphDivergence(benchmark::State& state) {
  RectangleProblem p;
  p.a = 1.0;
  p.b = 2.0;
  p.gammas.fill(1.2);
  p.grid_n = static_cast<int>(state.range(0));
  const RectangleGrid g = RectangleGrid::from_problem(p);
  Grid2D u = g.make_field();
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> d(-0.1, 0.1);
  for (double& v : u.values) v = d(rng);
  for (auto _ : state) benchmark::DoNotOptimize(graph_divergence(g, u, mode_of(state)));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(u.values.size()));
}

void BM_EnergyGradient(benchmark::State& state) {
  const TriMeshDrop d = seed_mesh(TrihedralConfig::orthogonal({1.2, 1.3, 1.4}), 1.0,
                                  static_cast<int>(state.range(0)), {std::nullopt, 0.02, 1});
  const EnergyContext ctx = EnergyContext::build(d);
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(d, ctx, mode_of(state)));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(d.surface.triangles.size()));
}

}  // namespace

BENCHMARK(BM_GraphDivergence)->ArgsProduct({{64, 256}, {0, 1}})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_EnergyGradient)->ArgsProduct({{3, 5}, {0, 1}})->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
