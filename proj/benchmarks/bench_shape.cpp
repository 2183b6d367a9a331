#include <benchmark/benchmark.h>

#include "shaperate/deformation.hpp"
#include "shaperate/fem.hpp"
#include "shaperate/mesh.hpp"
#include "shaperate/shape.hpp"

namespace {

using namespace shaperate;

mesh::TriMesh square(int n) {
  return mesh::gen_rect_mesh({0.0, 1.0}, {0.0, 1.0}, n, n, mesh::kAllSides);
}

void BM_AssembleSolve(benchmark::State& state) {
  const auto m = square(static_cast<int>(state.range(0)));
  const auto c = fem::poisson_manufactured();
  for (auto _ : state) {
    benchmark::DoNotOptimize(fem::solve(fem::assemble(m, c), 1e-10));
  }
  state.counters["nodes"] = m.node_count();
}
BENCHMARK(BM_AssembleSolve)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_DomainShapeDerivative(benchmark::State& state) {
  const auto m = square(static_cast<int>(state.range(0)));
  const auto c = fem::poisson_manufactured();
  const auto u = fem::solve(fem::assemble(m, c), 1e-12);
  const auto mu = deformation::bump(Box{Point(0.2, 0.3), Point(0.6, 0.8)}, Vec2(1.0, 0.5));
  for (auto _ : state) {
    benchmark::DoNotOptimize(shape::shape_derivative_domain(m, c, u, mu));
  }
}
BENCHMARK(BM_DomainShapeDerivative)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_FiniteDifferenceOracle(benchmark::State& state) {
  const auto m = square(static_cast<int>(state.range(0)));
  const auto c = fem::poisson_manufactured();
  const auto mu = deformation::stretch_x();
  for (auto _ : state) {
    benchmark::DoNotOptimize(shape::fd_oracle(m, c, mu, 1e-4));
  }
}
BENCHMARK(BM_FiniteDifferenceOracle)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_ModeThreeEnergyReleaseRate(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto m = mesh::insert_crack_slit(mesh::gen_rect_mesh({-1.0, 1.0}, {-1.0, 1.0}, n, n, mesh::kAllSides),
                                         Point(-1.0, 0.0), Point(0.0, 0.0));
  const auto c = fem::mode3_crack(Point::Zero(), Vec2(1.0, 0.0));
  for (auto _ : state) {
    const auto u = fem::solve(fem::assemble(m, c), 1e-12);
    benchmark::DoNotOptimize(shape::energy_release_rate(m, c, u, Point::Zero(), Vec2(1.0, 0.0), 0.2, 0.8));
  }
}
BENCHMARK(BM_ModeThreeEnergyReleaseRate)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
