// Serial reference vs OpenMP kernel timings.

#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "rydyn/atomic_data.hpp"
#include "rydyn/estimation.hpp"
#include "rydyn/kinetics.hpp"
#include "rydyn/superradiance.hpp"

using namespace rydyn;

namespace {

const RydbergAtom& rb() {
  static const RydbergAtom atom = RydbergAtom::rubidium87();
  return atom;
}

KineticsParams rates_28d() {
  KineticsParams p;
  p.excitation = 110.0;
  p.radiative = 4.1e4;
  p.other_radiative = 3.1e4;
  p.transfer = 1.3e5;
  p.other_loss = 265.0;
  p.load_rate = 1e8;
  p.background_loss = 1.0;
  return p;
}

template <bool Parallel>
void BM_level_rates(benchmark::State& state) {
  const auto level = rb().level({28, 2, 5});
  for (auto _ : state) {
    auto r = Parallel ? rb().level_rates(level) : rb().level_rates_serial(level);
    benchmark::DoNotOptimize(r);
  }
}

template <bool Parallel>
void BM_build_rates(benchmark::State& state) {
  const auto basis = LevelBasis::window(rb(), {28, 2, 5}, static_cast<int>(state.range(0)), 6);
  const CloudGeometry cloud{0.5e-3};
  for (auto _ : state) {
    auto m = Parallel ? build_rates(rb(), basis, cloud) : build_rates_serial(rb(), basis, cloud);
    benchmark::DoNotOptimize(m);
  }
}

template <bool Parallel>
void BM_scan(benchmark::State& state) {
  ExcitationParams e;
  e.intermediate_detuning = 1.0;
  e.rabi_red = 2.0;
  e.rabi_blue = 2.0 * std::sqrt(110.0 * 9e6);
  e.linewidth = 9e6;
  std::vector<double> grid(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = -4e7 + 8e7 * static_cast<double>(i) / (grid.size() - 1);
  const auto p = rates_28d();
  for (auto _ : state) {
    auto s = Parallel ? scan(p, e, {}, grid) : scan_serial(p, e, {}, grid);
    benchmark::DoNotOptimize(s);
  }
}

template <bool Parallel>
void BM_fit_batch(benchmark::State& state) {
  std::vector<ProbeScanDataset> sets;
  for (int i = 0; i < state.range(0); ++i)
    sets.push_back(synthesize_dataset(rates_28d(), {}, Observable::loss, probe_grid(1e6, 12),
                                      {NoiseKind::gaussian, 0.05, 1.0}, static_cast<std::uint64_t>(i + 1)));
  for (auto _ : state) {
    auto f = Parallel ? fit_batch(sets) : fit_batch_serial(sets);
    benchmark::DoNotOptimize(f);
  }
}

}  // namespace

BENCHMARK(BM_level_rates<false>)->Name("level_rates/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_level_rates<true>)->Name("level_rates/openmp")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_build_rates<false>)->Name("build_rates/serial")->Arg(5)->Arg(10)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_build_rates<true>)->Name("build_rates/openmp")->Arg(5)->Arg(10)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_scan<false>)->Name("scan/serial")->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_scan<true>)->Name("scan/openmp")->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_fit_batch<false>)->Name("fit_batch/serial")->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_fit_batch<true>)->Name("fit_batch/openmp")->Arg(64)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
