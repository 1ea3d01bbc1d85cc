// Serial reference vs OpenMP kernel for the data-parallel hot paths.
// Both variants produce bit-identical output; only wall time differs.

#include <benchmark/benchmark.h>

#include <vector>

#include "pexp/concentration.hpp"
#include "pexp/experiments.hpp"
#include "pexp/measure.hpp"
#include "pexp/models.hpp"

using namespace pexp;

namespace {

const std::vector<double> kEps = {0.4, 0.6, 0.9, 1.3};

template <bool Parallel>
void BM_SmallBallCurve(benchmark::State& state) {
  const PExpMeasure m(ScalingSpec::linear(1.5, 1.0, 1, 512));
  const auto samples = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    auto c = Parallel ? smallball_curve(m, kEps, BallNorm::l2, samples, 1)
                      : smallball_curve_serial(m, kEps, BallNorm::l2, samples, 1);
    benchmark::DoNotOptimize(c);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SmallBallCurve<false>)->Name("smallball_curve/serial")->Arg(1 << 15)->UseRealTime();
BENCHMARK(BM_SmallBallCurve<true>)->Name("smallball_curve/openmp")->Arg(1 << 15)->UseRealTime();

template <bool Parallel>
void BM_Anderson(benchmark::State& state) {
  const PExpMeasure m(ScalingSpec::linear(1.0, 1.0, 1, 3));
  const std::vector<double> shift = {0.3, -0.2, 0.1};
  for (auto _ : state) {
    auto r = Parallel ? anderson_check(m, 1.0, shift, 200000, 1)
                      : anderson_check_serial(m, 1.0, shift, 200000, 1);
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK(BM_Anderson<false>)->Name("anderson/serial")->UseRealTime();
BENCHMARK(BM_Anderson<true>)->Name("anderson/openmp")->UseRealTime();

template <bool Parallel>
void BM_WhiteNoisePosterior(benchmark::State& state) {
  const auto N = static_cast<std::size_t>(state.range(0));
  const PExpMeasure m(ScalingSpec::linear(1.0, 1.0, 1, N));
  const auto w0 = make_truth({1.0, 2.0, 1}, 0.05, N);
  Rng rng = substream(1, {});
  const auto data = wn_simulate(w0, 1e4, rng);
  for (auto _ : state) {
    auto c = Parallel ? wn_posterior_sample(data, m, 200, 1)
                      : wn_posterior_sample_serial(data, m, 200, 1);
    benchmark::DoNotOptimize(c);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_WhiteNoisePosterior<false>)->Name("wn_posterior/serial")->Arg(1024)->UseRealTime();
BENCHMARK(BM_WhiteNoisePosterior<true>)->Name("wn_posterior/openmp")->Arg(1024)->UseRealTime();

template <bool Parallel>
void BM_Contraction(benchmark::State& state) {
  ExperimentConfig c;
  c.p = 1.5;
  c.n_grid = {256, 1024, 4096, 16384};
  c.replicates = 4;
  c.posterior_draws = 100;
  for (auto _ : state) {
    auto r = Parallel ? run_contraction(c) : run_contraction_serial(c);
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK(BM_Contraction<false>)->Name("contraction/serial")->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Contraction<true>)->Name("contraction/openmp")->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
