// Serial vs OpenMP versions of the batch kernels.
//   ./bess_bench --benchmark_filter=Project

#include <benchmark/benchmark.h>

#include <random>

#include "bess/kernels.hpp"

#ifndef BESS_DATA_DIR
#define BESS_DATA_DIR "data"
#endif

using namespace bess;

namespace {

const CurveLibrary& curves() {
  static const CurveLibrary lib(load_curves_file(std::string(BESS_DATA_DIR) + "/curves.txt"));
  return lib;
}

const TtcParamSet& params() {
  static const TtcParamSet set = load_ttc_params_file(std::string(BESS_DATA_DIR) + "/ttc_params.txt");
  return set;
}

std::vector<PqPoint> random_points(std::size_t n, double span) {
  std::mt19937_64 rng(n);
  std::uniform_real_distribution<double> u(-span, span);
  std::vector<PqPoint> out(n);
  for (auto& p : out) p = {u(rng), u(rng)};
  return out;
}

FeasibleRegion demo_region() {
  const std::vector<CurveId> ids{{600, 300}, {500, 330}};
  return build_region(curves(), ids, 7.0 / 9.0);
}

template <bool Parallel>
void BM_Classify(benchmark::State& state) {
  const auto region = demo_region();
  const auto pts = random_points(static_cast<std::size_t>(state.range(0)), 900);
  for (auto _ : state) {
    auto r = Parallel ? kernels::classify_points(region, pts) : kernels::classify_points_serial(region, pts);
    benchmark::DoNotOptimize(r.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_Project(benchmark::State& state) {
  const auto region = demo_region();
  const auto targets = random_points(static_cast<std::size_t>(state.range(0)), 1500);
  const PowerInterval bounds{-600, 600};
  for (auto _ : state) {
    auto r = Parallel ? kernels::project_targets(region, targets, {}, bounds)
                      : kernels::project_targets_serial(region, targets, {}, bounds);
    benchmark::DoNotOptimize(r.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_Batch(benchmark::State& state) {
  std::vector<kernels::BatchJob> jobs;
  for (int i = 0; i < state.range(0); ++i) {
    auto spec = load_scenario_file(std::string(BESS_DATA_DIR) + "/scenarios/scenario" + std::to_string(i % 4 + 1) +
                                   ".cfg");
    jobs.push_back({spec, resolve_trace(spec.trace, spec.steps(), static_cast<std::uint64_t>(i))});
  }
  for (auto _ : state) {
    auto r = Parallel ? kernels::run_batch(jobs, curves(), params()) : kernels::run_batch_serial(jobs, curves(), params());
    benchmark::DoNotOptimize(r.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_Classify<false>)->Name("Classify/serial")->Arg(1 << 20)->UseRealTime();
BENCHMARK(BM_Classify<true>)->Name("Classify/omp")->Arg(1 << 20)->UseRealTime();
BENCHMARK(BM_Project<false>)->Name("Project/serial")->Arg(1 << 15)->UseRealTime();
BENCHMARK(BM_Project<true>)->Name("Project/omp")->Arg(1 << 15)->UseRealTime();
BENCHMARK(BM_Batch<false>)->Name("Batch/serial")->Arg(16)->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Batch<true>)->Name("Batch/omp")->Arg(16)->UseRealTime()->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
