#pragma once

// Replicate-level parallel reduction.
//
// Parallel runs each OpenMP worker over a static slice of replicate indices
// with private accumulator and workspace, then merges the accumulators. The
// Serial mode is the reference loop kept for tests and the benchmark; with
// order-independent accumulators the two modes agree bit for bit.

#include <cstdint>
#include <cstdlib>
#include <string>

#include <omp.h>

namespace bridgelab {

enum class ExecMode { Serial, Parallel };

/// Worker count for Parallel mode: OpenMP's default capped by the
/// BRIDGELAB_THREADS environment variable when it holds a positive integer.
inline int worker_count() {
  int n = omp_get_max_threads();
  if (const char* env = std::getenv("BRIDGELAB_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && cap > 0 && cap < n) n = static_cast<int>(cap);
  }
  return n < 1 ? 1 : n;
}

/// Calls body(rep, workspace, acc) for rep in [0, n) and returns the merged
/// accumulator. Acc needs merge(const Acc&).
template <class MakeAcc, class MakeWorkspace, class Body>
auto reduce_replicates(std::int64_t n, ExecMode mode, MakeAcc make_acc,
                       MakeWorkspace make_ws, Body body) {
  auto total = make_acc();
  if (mode == ExecMode::Serial || n < 2) {
    auto ws = make_ws();
    for (std::int64_t rep = 0; rep < n; ++rep) body(rep, ws, total);
    return total;
  }
  const int threads = worker_count();
#pragma omp parallel num_threads(threads)
  {
    auto local = make_acc();
    auto ws = make_ws();
#pragma omp for schedule(static)
    for (std::int64_t rep = 0; rep < n; ++rep) body(rep, ws, local);
#pragma omp critical(bridgelab_reduce)
    total.merge(local);
  }
  return total;
}

}  // namespace bridgelab
