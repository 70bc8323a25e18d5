#include <memory>

#include <benchmark/benchmark.h>

#include "toruslab/harness.hpp"

using namespace toruslab;

namespace {

void BM_EnumerateSpectrum(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(enumerate_spectrum(2, state.range(0)));
}
BENCHMARK(BM_EnumerateSpectrum)->Arg(10'000)->Arg(100'000)->Unit(benchmark::kMillisecond);

void BM_LatticeBall(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(LatticeBall(2, state.range(0)));
}
BENCHMARK(BM_LatticeBall)->Arg(40'000)->Unit(benchmark::kMillisecond);

void BM_SecularValue(benchmark::State& state) {
  const auto n = static_cast<int>(state.range(0));
  const auto table = enumerate_spectrum(2, 20'000);
  const auto gap = table.gap_around(10'036);
  auto ball = std::make_shared<const LatticeBall>(2, 4 * gap.next);
  const SecularSystem sys({2, sample_positions(1, 0, n, 2), ExtensionParameter::scalar(n, 0.0)}, ball, gap);
  const double lam = gap.center + 0.5 * (gap.next - gap.center);
  for (auto _ : state) benchmark::DoNotOptimize(sys.value(lam));
}
BENCHMARK(BM_SecularValue)->Arg(1)->Arg(4)->Arg(8);

void BM_SecularSetup(benchmark::State& state) {
  const auto n = static_cast<int>(state.range(0));
  const auto table = enumerate_spectrum(2, 20'000);
  const auto gap = table.gap_around(10'036);
  auto ball = std::make_shared<const LatticeBall>(2, 4 * gap.next);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        SecularSystem({2, sample_positions(1, 0, n, 2), ExtensionParameter::scalar(n, 0.0)}, ball, gap));
  }
}
BENCHMARK(BM_SecularSetup)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_Trial(benchmark::State& state) {
  const auto n = static_cast<int>(state.range(0));
  TrialSpec s;
  s.sprime.delta = 0.35;
  s.sprime.eps = 0.04;
  s.sprime.eps_prime = 0.2;
  s.sprime.c_gap = s.sprime.c_coeff = 10;
  s.m_k = 10'036;
  s.n_scatterers = n;
  s.u = ExtensionParameter::scalar(n, 0.0);
  const Experiment e(s, table_for(s));
  std::uint64_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(e.run_trial(i++));
}
BENCHMARK(BM_Trial)->Arg(1)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
