// Serial reference versus the OpenMP map kernel on a 20-site chain.

#include <benchmark/benchmark.h>
#include <omp.h>

#include <numbers>

#include "cqed/model.hpp"
#include "cqed/sweep.hpp"

namespace {

using namespace cqed;

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Problem {
  LatticeParams params;
  std::vector<double> freqs;
  std::vector<double> powers;
  SweepOptions options;
};

Problem make_problem(int n_freqs) {
  Problem pr;
  pr.params = paper_default_params();
  pr.params.n_sites = 20;
  pr.params.output_site = 20;
  for (int k = 0; k < n_freqs; ++k) pr.freqs.push_back(kTwoPi * (7.40e9 + 1e7 * k / std::max(1, n_freqs - 1)));
  pr.powers = {1e7, 3e7, 1e8};
  pr.options = SweepOptions::defaults_for(pr.params);
  pr.options.integrator.rel_tol = 1e-6;
  pr.options.integrator.abs_tol = 1e-9;
  pr.options.integrator.t_transient = 5e-6;
  pr.options.integrator.t_average = 1e-6;
  return pr;
}

void BM_map_serial(benchmark::State& state) {
  const auto pr = make_problem(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto g = serial::frequency_power_map(pr.params, pr.freqs, pr.powers, Protocol::fresh_start, pr.options);
    benchmark::DoNotOptimize(g.cells.data());
  }
  state.counters["cells"] = static_cast<double>(pr.freqs.size() * pr.powers.size());
}

void BM_map_openmp(benchmark::State& state) {
  const auto pr = make_problem(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto g = frequency_power_map(pr.params, pr.freqs, pr.powers, Protocol::fresh_start, pr.options);
    benchmark::DoNotOptimize(g.cells.data());
  }
  state.counters["cells"] = static_cast<double>(pr.freqs.size() * pr.powers.size());
  state.counters["threads"] = omp_get_max_threads();
}

BENCHMARK(BM_map_serial)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_map_openmp)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
