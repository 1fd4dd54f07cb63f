#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "pulsefield/initial_data.hpp"
#include "pulsefield/meanfield.hpp"
#include "pulsefield/particles.hpp"
#include "pulsefield/quantile.hpp"
#include "pulsefield/steady_state.hpp"

using namespace pulsefield;

namespace {

const PhaseResponse& concave() {
  static const PhaseResponse k(Quadratic{1.2, -0.4, -0.1}, 1.0);
  return k;
}

void BM_Step(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  SolverConfig cfg;
  cfg.cells = m;
  auto s = make_initial_state(perturbed_steady(concave(), m, 0.05, 1), concave(), RunMode::original);
  for (auto _ : state) {
    auto r = step(s, concave(), cfg);
    benchmark::DoNotOptimize(r.state.n_tilde);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Step)->RangeMultiplier(2)->Range(100, 1600)->Complexity(benchmark::oN);

void BM_RunUnitTau(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  SolverConfig cfg;
  cfg.cells = m;
  cfg.snapshot_every = 0;
  const auto init = make_initial_state(perturbed_steady(concave(), m, 0.05, 1), concave(), RunMode::original);
  for (auto _ : state) {
    auto rec = run(init, 1.0, concave(), cfg);
    benchmark::DoNotOptimize(rec.final_state.n_tilde);
  }
}
BENCHMARK(BM_RunUnitTau)->Arg(200)->Arg(400)->Arg(800)->Unit(benchmark::kMillisecond);

void BM_SteadyState(benchmark::State& state) {
  for (auto _ : state) {
    auto ss = solve_steady_state(concave(), static_cast<std::size_t>(state.range(0)));
    benchmark::DoNotOptimize(ss.n_star);
  }
}
BENCHMARK(BM_SteadyState)->Arg(200)->Arg(800)->Unit(benchmark::kMillisecond);

void BM_Cascade(benchmark::State& state) {
  const PhaseResponse k(Affine{0.0, 0.5}, 1.0);
  const auto ss = solve_steady_state(k, 200);
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    state.PauseTiming();
    auto e = init_from_profile(ss.profile, 1.0, n, 1);
    state.ResumeTiming();
    e.run_events(k, 1000);
    benchmark::DoNotOptimize(e.total_resets());
  }
}
BENCHMARK(BM_Cascade)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_QuantileFromDensity(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  std::vector<double> rho;
  for (int i = 0; i <= 4096; ++i) rho.push_back(1.0 + 0.5 * std::cos(6.0 * i / 4096.0));
  double mass = 0.0;
  for (int i = 0; i < 4096; ++i) mass += 0.5 * (rho[i] + rho[i + 1]) / 4096.0;
  for (auto& x : rho) x /= mass;
  for (auto _ : state) {
    auto p = quantile_from_density(SampledDensity{1.0, rho}, m);
    benchmark::DoNotOptimize(p.q.back());
  }
}
BENCHMARK(BM_QuantileFromDensity)->Arg(200)->Arg(1600);

void BM_EmpiricalQuantile(benchmark::State& state) {
  const auto e = init_from_profile(perturbed_steady(concave(), 200, 0.05, 1), 1.0,
                                   static_cast<std::size_t>(state.range(0)), 3);
  for (auto _ : state) {
    auto p = empirical_quantile(e, 200);
    benchmark::DoNotOptimize(p.q.back());
  }
}
BENCHMARK(BM_EmpiricalQuantile)->Arg(1000)->Arg(100000);

}  // namespace
BENCHMARK_MAIN();
