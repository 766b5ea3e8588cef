#pragma once

// Sample paths of the driving Wiener process and of the three bridge
// constructions built from it.
//
// A DriverPlan fixes the merged time set (base grid plus the times at which
// the ST construction reads the driver, possibly beyond T) and, per merged
// interval, a lower-triangular square root of the joint law of the increments
//   Wiener: (dW, dM)          M_t = int_0^t dW_s / (T - s)
//   OU:     (dW, dA, dB)      A_t = int_0^t e^{-qs} dW_s,
//                             B_t = int_0^t dW_s / sinh(q(T - s))
// Auxiliary coordinates are present only on intervals where they are finite
// (dM, dB before T; dA up to T). Plans are immutable and shared read-only
// between workers; Driver and PathBundle are per-worker workspaces.

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "bridgelab/common.hpp"
#include "bridgelab/ou_oracle.hpp"
#include "bridgelab/rng.hpp"

namespace bridgelab::paths {

struct TimeGrid {
  double T = 1.0;
  std::vector<double> points;

  static TimeGrid uniform(double T, int n_steps);
  /// Points must start at 0 and increase strictly; the last one is T.
  static TimeGrid from_points(std::vector<double> points);

  int n_steps() const { return static_cast<int>(points.size()) - 1; }
};

/// Process, end levels and OU parameters of a simulation.
struct ModelSpec {
  Process process = Process::Wiener;
  double a = 0.0;
  double b = 0.0;
  ou::ProcessParams ou{};

  void validate() const;
};

class DriverPlan {
 public:
  /// Wiener driver with the ST times tT/(T - t) of every grid point t < T.
  static DriverPlan wiener(const TimeGrid& grid);
  /// Wiener driver on the grid merged with arbitrary extra times >= 0.
  static DriverPlan wiener(const TimeGrid& grid, std::vector<double> extra_times);
  /// OU driver with the ST times kappa_star(t) of every grid point t < T.
  static DriverPlan ou(const TimeGrid& grid, const ou::ProcessParams& params);

  Process process() const { return process_; }
  const TimeGrid& grid() const { return grid_; }
  double T() const { return grid_.T; }
  const ou::ProcessParams& ou_params() const { return params_; }

  /// Merged sorted times, starting at 0.
  const std::vector<double>& times() const { return times_; }
  std::size_t intervals() const { return times_.size() - 1; }
  /// Index in times() of grid point k.
  const std::vector<std::size_t>& grid_index() const { return grid_index_; }
  /// Index in times() of the ST time of grid point k < n (unused for k = n).
  const std::vector<std::size_t>& st_index() const { return st_index_; }
  std::size_t t_index() const { return grid_index_.back(); }

  /// Number of jointly sampled coordinates on interval i (1 to 3).
  int dim(std::size_t i) const { return dim_[i]; }
  /// Lower-triangular factor, row-major packed: L00, L10, L11, L20, L21, L22.
  const double* factor(std::size_t i) const { return &factor_[6 * i]; }
  /// Cov(coordinate c of interval i, W_T) for the Wiener plan (0 beyond T).
  double cov_with_endpoint(std::size_t i, int c) const { return cov_wt_[2 * i + c]; }

  /// Smallest pivot relative to its diagonal entry over all factors; pivots
  /// that came out negative within tolerance count as 0.
  double min_pivot_ratio() const { return min_pivot_ratio_; }

  /// Covariance matrix (row-major dim x dim) of interval i, for diagnostics.
  std::vector<double> interval_covariance(std::size_t i) const;

  /// Deterministic per-grid-point coefficients of the OU constructions.
  struct OuCoeffs {
    double ra;    ///< sinh(q(T-t)) / sinh(qT)
    double rb;    ///< sinh(qt) / sinh(qT)
    double eqt;   ///< e^{qt}
    double shr;   ///< sinh(q(T-t))
  };
  const OuCoeffs& ou_coeffs(std::size_t k) const { return ou_coeffs_[k]; }

 private:
  void merge_times(const std::vector<double>& extra, const std::vector<double>& st_times);
  void factorize();
  void store_factor(std::size_t i, const long double L[3][3]);

  Process process_ = Process::Wiener;
  TimeGrid grid_;
  ou::ProcessParams params_{};
  std::vector<double> times_;
  std::vector<std::size_t> grid_index_, st_index_;
  std::vector<int> dim_;
  std::vector<double> factor_;
  std::vector<double> cov_wt_;
  std::vector<OuCoeffs> ou_coeffs_;
  double min_pivot_ratio_ = 1.0;
};

/// Increments and cumulative values of one driver sample.
struct Driver {
  std::vector<double> dw, d1, d2;  ///< per interval; d1 = dM or dA, d2 = dB
  std::vector<double> w;           ///< W at plan times
  std::vector<double> c1, c2;      ///< cumulative M or A, and B, at plan times
  std::optional<double> pinned_endpoint;  ///< W_T after conditioning
};

/// Draws a driver from the replicate stream of `seed`.
void generate(const DriverPlan& plan, rng::SeedSpec seed, Driver& drv);

/// Rebuilds cumulative values from the increments.
void accumulate(const DriverPlan& plan, Driver& drv);

/// Projects the driver onto {W_T = d}: every increment X gets
/// (d - W_T) Cov(X, W_T) / T added, then cumulative values are rebuilt with
/// W_T = d exactly. Wiener plans only.
void condition_on_endpoint(const DriverPlan& plan, Driver& drv, double d);

/// Process, bridges and deviations on the base grid. Deviations at T are the
/// continuous extension (process value minus b).
struct PathBundle {
  Process process = Process::Wiener;
  std::vector<double> t;
  std::vector<double> w;        ///< driving W at grid points
  std::vector<double> w_ext;    ///< W at the ST time of each grid point (NaN at T)
  std::vector<double> aux;      ///< M or B at grid points (NaN at T)
  std::vector<double> process_path;  ///< a + W, or U^a
  std::array<std::vector<double>, 3> bridge;
  std::array<std::vector<double>, 3> deviation;

  const std::vector<double>& bridge_of(Kind k) const { return bridge[kind_index(k)]; }
  const std::vector<double>& deviation_of(Kind k) const { return deviation[kind_index(k)]; }
};

void build_wiener_bridges(const DriverPlan& plan, const Driver& drv, const ModelSpec& spec,
                          PathBundle& out);
void build_ou_paths(const DriverPlan& plan, const Driver& drv, const ModelSpec& spec,
                    PathBundle& out);
/// Dispatches on spec.process, which must match the plan.
void build_paths(const DriverPlan& plan, const Driver& drv, const ModelSpec& spec,
                 PathBundle& out);

/// Euler-Maruyama solution of the bridge SDE on every stride-th grid point,
/// driven by the plan's own W. The last step is set to b; the drift is never
/// evaluated at T. Output has n_steps / stride + 1 values.
void euler_bridge(const DriverPlan& plan, const Driver& drv, const ModelSpec& spec, int stride,
                  std::vector<double>& out);

/// Convenience wrapper owning the workspaces for one worker.
class Simulator {
 public:
  Simulator(const DriverPlan& plan, ModelSpec spec);

  /// Generates replicate `seed`, optionally conditioned on W_T = d.
  const PathBundle& run(rng::SeedSpec seed, std::optional<double> d = std::nullopt);

  const Driver& driver() const { return drv_; }
  const PathBundle& bundle() const { return bundle_; }

 private:
  const DriverPlan* plan_;
  ModelSpec spec_;
  Driver drv_;
  PathBundle bundle_;
};

/// CSV rows t,<process>,<av>,<ir>,<st> (with a leading replicate column when
/// replicate >= 0). Column names W.. or U.. by process.
void write_paths_header(std::ostream& os, Process process, bool with_replicate);
void write_paths_rows(std::ostream& os, const PathBundle& bundle, std::int64_t replicate);

}  // namespace bridgelab::paths
