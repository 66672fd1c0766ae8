// Serial vs parallel timings for the grid kernels. The second argument of
// every benchmark selects the execution mode (0 serial, 1 parallel).

#include <benchmark/benchmark.h>

#include <cmath>
#include <random>
#include <vector>

#include "cot/beckmann.hpp"
#include "cot/kernels.hpp"
#include "cot/trajectories.hpp"

using namespace cot;

namespace {

Exec exec_of(const benchmark::State& state) { return state.range(1) == 0 ? Exec::Serial : Exec::Parallel; }

Grid square(const benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  return Grid::make(n, n, 1.0 / n);
}

VectorField random_flow(const Grid& g) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  VectorField v(g);
  for (double& x : v.vx_data()) x = u(rng);
  for (double& x : v.vy_data()) x = u(rng);
  v.clear_boundary();
  return v;
}

ScalarField bump(const Grid& g, double cx) {
  ScalarField f(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      f(i, j) = 0.05 + std::exp(-(std::pow(g.xc(i) - cx, 2) + std::pow(g.yc(j) - 0.5, 2)) / 0.0128);
  const double m = f.mass();
  for (double& x : f.values()) x /= m;
  return f;
}

void BM_divergence(benchmark::State& state) {
  const Grid g = square(state);
  const VectorField v = random_flow(g);
  ScalarField out(g);
  for (auto _ : state) {
    kernels::divergence(v, out, exec_of(state));
    benchmark::DoNotOptimize(out.values().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.cells()));
}

void BM_neumann_laplacian(benchmark::State& state) {
  const Grid g = square(state);
  const ScalarField u = bump(g, 0.4);
  std::vector<double> out(g.cells());
  for (auto _ : state) {
    kernels::neumann_laplacian(g, u.values(), out, exec_of(state));
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.cells()));
}

void BM_cell_prox(benchmark::State& state) {
  const Grid g = square(state);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<double> z(4 * g.cells()), w(z.size()), step(g.cells(), 0.3);
  for (double& x : z) x = u(rng);
  const auto H = CongestionSpec::affine_power(0.2, 2.5);
  for (auto _ : state) {
    kernels::cell_prox(H, z, step, w, exec_of(state));
    benchmark::DoNotOptimize(w.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.cells()));
}

void BM_deposit_segments(benchmark::State& state) {
  const Grid g = square(state);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<kernels::Segment> segs(100000);
  for (auto& s : segs) s = {u(rng), u(rng), u(rng), u(rng), 1e-5};
  std::vector<double> length(g.cells()), dx(g.cells()), dy(g.cells());
  for (auto _ : state) {
    std::fill(length.begin(), length.end(), 0.0);
    kernels::deposit_segments(g, segs, length.data(), dx.data(), dy.data(), exec_of(state));
    benchmark::DoNotOptimize(length.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(segs.size()));
}

void BM_trajectories(benchmark::State& state) {
  const Grid g = square(state);
  const ScalarField mu = bump(g, 0.35), nu = bump(g, 0.65);
  const VectorField v = solve_dual_quadratic(mu, nu).v;
  TrajectoryOptions opt;
  opt.n_particles = 10000;
  opt.n_steps = 200;
  opt.exec = exec_of(state);
  for (auto _ : state) benchmark::DoNotOptimize(reconstruct_trajectories(v, mu, nu, opt).floor_hits);
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(opt.n_particles));
}

}  // namespace

BENCHMARK(BM_divergence)->ArgsProduct({{64, 256, 1024}, {0, 1}})->UseRealTime();
BENCHMARK(BM_neumann_laplacian)->ArgsProduct({{64, 256, 1024}, {0, 1}})->UseRealTime();
BENCHMARK(BM_cell_prox)->ArgsProduct({{64, 256, 1024}, {0, 1}})->UseRealTime();
BENCHMARK(BM_deposit_segments)->ArgsProduct({{64, 256}, {0, 1}})->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK(BM_trajectories)->ArgsProduct({{64}, {0, 1}})->UseRealTime()->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
