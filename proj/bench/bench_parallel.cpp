// Serial reference loop against the OpenMP reduction on the same work.
// Arg 0 selects the mode: 0 serial, 1 parallel.

#include <benchmark/benchmark.h>

#include <array>
#include <string>

#include "bridgelab/exact_sum.hpp"
#include "bridgelab/mc_lab.hpp"
#include "bridgelab/parallel.hpp"
#include "bridgelab/path_engine.hpp"
#include "bridgelab/rng.hpp"

using namespace bridgelab;

namespace {

ExecMode mode_of(const benchmark::State& st) {
  return st.range(0) == 0 ? ExecMode::Serial : ExecMode::Parallel;
}

void label(benchmark::State& st) {
  st.SetLabel(st.range(0) == 0 ? "serial" : "parallel x" + std::to_string(worker_count()));
}

// Exact sums of normal variates, 256 per replicate.
void BM_NormalReduce(benchmark::State& st) {
  const auto mode = mode_of(st);
  const std::int64_t n = st.range(1);
  for (auto _ : st) {
    auto acc = reduce_replicates(
        n, mode, [] { return SumSet(2); }, [] { return 0; },
        [](std::int64_t rep, int&, SumSet& a) {
          rng::NormalStream z({11, static_cast<std::uint64_t>(rep)});
          double s = 0.0, ss = 0.0;
          for (int i = 0; i < 256; ++i) {
            const double x = z.next();
            s += x;
            ss += x * x;
          }
          a.add_row(std::array<double, 2>{s, ss});
        });
    benchmark::DoNotOptimize(acc);
  }
  st.SetItemsProcessed(st.iterations() * n);
  label(st);
}
BENCHMARK(BM_NormalReduce)->Args({0, 20000})->Args({1, 20000})->Unit(benchmark::kMillisecond);

// Full integrated-deviation estimate on a Wiener and an OU scenario.
void BM_Integrated(benchmark::State& st) {
  mc::RunConfig cfg;
  cfg.mode = mode_of(st);
  cfg.reps = st.range(1);
  mc::Scenario sc;
  if (st.range(2) != 0) {
    sc.model.process = Process::OU;
    sc.model.ou = {1.0, 1.0};
  }
  for (auto _ : st) {
    auto res = mc::estimate_integrated(sc, 256, cfg);
    benchmark::DoNotOptimize(res);
  }
  st.SetItemsProcessed(st.iterations() * cfg.reps);
  label(st);
}
BENCHMARK(BM_Integrated)
    ->Args({0, 5000, 0})
    ->Args({1, 5000, 0})
    ->Args({0, 5000, 1})
    ->Args({1, 5000, 1})
    ->Unit(benchmark::kMillisecond);

// Pointwise statistics at nine interior times.
void BM_Pointwise(benchmark::State& st) {
  mc::RunConfig cfg;
  cfg.mode = mode_of(st);
  cfg.reps = st.range(1);
  mc::Scenario sc;
  const mc::PointwiseRequest req{{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}, {}, true, false};
  for (auto _ : st) {
    auto res = mc::estimate_pointwise(sc, req, cfg);
    benchmark::DoNotOptimize(res);
  }
  st.SetItemsProcessed(st.iterations() * cfg.reps);
  label(st);
}
BENCHMARK(BM_Pointwise)->Args({0, 20000})->Args({1, 20000})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
