// Serial reference vs OpenMP kernels. Thread count follows OMP_NUM_THREADS.
#include <benchmark/benchmark.h>

#include <cmath>

#include <omp.h>

#include "cppll/sweep.hpp"

using namespace cppll;
using namespace cppll::sweep;

namespace {

const NormalizedParameters kHidden{0.2, 1.7};
const PhysicalParameters kRf{400.0, 0.156e-9, 1e5, 5e-3, 1e-6, 1e6};

double period_for_beta(double b) {
  return std::sqrt(2.0 * kRf.capacitance_farads * b / (kRf.vco_gain_hz_per_volt * kRf.pump_current_amps));
}

void BM_BasinSerial(benchmark::State& st) {
  const std::size_t n = st.range(0);
  for (auto _ : st) benchmark::DoNotOptimize(serial::basin_map(kHidden, {-0.6, 0.6, n}, {-0.9, 1.2, n}));
  st.SetItemsProcessed(st.iterations() * n * n);
}

void BM_BasinParallel(benchmark::State& st) {
  const std::size_t n = st.range(0);
  for (auto _ : st) benchmark::DoNotOptimize(basin_map(kHidden, {-0.6, 0.6, n}, {-0.9, 1.2, n}));
  st.SetItemsProcessed(st.iterations() * n * n);
  st.counters["threads"] = omp_get_max_threads();
}

// beta = 1.4: every sample locks, so the whole sample is scanned.
void BM_PullInProbeSerial(benchmark::State& st) {
  PullInOptions po;
  po.samples = st.range(0);
  const auto samples = pull_in_samples(po);
  for (auto _ : st) benchmark::DoNotOptimize(serial::probe_pull_in(kRf, period_for_beta(1.4), po, samples));
  st.SetItemsProcessed(st.iterations() * po.samples);
}

void BM_PullInProbeParallel(benchmark::State& st) {
  PullInOptions po;
  po.samples = st.range(0);
  const auto samples = pull_in_samples(po);
  for (auto _ : st) benchmark::DoNotOptimize(probe_pull_in(kRf, period_for_beta(1.4), po, samples));
  st.SetItemsProcessed(st.iterations() * po.samples);
  st.counters["threads"] = omp_get_max_threads();
}

void BM_ParamMapSerial(benchmark::State& st) {
  const std::size_t n = st.range(0);
  for (auto _ : st) benchmark::DoNotOptimize(serial::param_map({0.05, 1.2, n}, {0.05, 2.5, n}));
  st.SetItemsProcessed(st.iterations() * n * n);
}

void BM_ParamMapParallel(benchmark::State& st) {
  const std::size_t n = st.range(0);
  for (auto _ : st) benchmark::DoNotOptimize(param_map({0.05, 1.2, n}, {0.05, 2.5, n}));
  st.SetItemsProcessed(st.iterations() * n * n);
}

}  // namespace

BENCHMARK(BM_BasinSerial)->Arg(32)->Arg(96)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BasinParallel)->Arg(32)->Arg(96)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PullInProbeSerial)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PullInProbeParallel)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ParamMapSerial)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ParamMapParallel)->Arg(16)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
