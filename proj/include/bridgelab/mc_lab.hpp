#pragma once

// Monte Carlo estimates of deviation statistics and the verification suites
// that gate them against the closed forms.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bridgelab/exact_sum.hpp"
#include "bridgelab/parallel.hpp"
#include "bridgelab/path_engine.hpp"
#include "bridgelab/wiener_oracle.hpp"

namespace bridgelab::mc {

using Json = nlohmann::json;

struct RunConfig {
  std::int64_t reps = 100000;
  std::uint64_t seed = 42;
  ExecMode mode = ExecMode::Parallel;
  double gate = 4.0;
  int batches = 100;  ///< contiguous replicate batches for batch-means errors
};

/// Model plus horizon and optional driver endpoint W_T = d (Wiener only).
struct Scenario {
  paths::ModelSpec model;
  double T = 1.0;
  std::optional<double> d;

  void validate() const;
  Json to_json() const;
};

enum class GateMode {
  Agree,     ///< |estimate - oracle| <= gate * se
  Separate,  ///< estimate has the oracle's sign and |estimate| > gate * se
};

struct EstimateReport {
  std::string statistic;
  std::string kind;  ///< "av", "ir", "st", a pair such as "av-ir", or ""
  std::optional<double> t;
  Json params = Json::object();
  double estimate = 0.0;
  double std_error = 0.0;
  std::int64_t replicates = 0;
  std::optional<double> oracle;
  std::optional<double> z;
  GateMode mode = GateMode::Agree;
  double gate = 4.0;
  std::string verdict = "no-oracle";  ///< "pass", "fail" or "no-oracle"
  std::uint64_t seed = 0;
  int grid_n = 0;
  std::optional<double> bias;  ///< grid-refinement bias estimate of the raw mean
  std::optional<double> raw_estimate;
  std::string note;

  bool passed() const { return verdict != "fail"; }
  /// Fills z and verdict from estimate, std_error, oracle, mode and gate.
  void judge();
  Json to_json() const;
};

/// Absolute floor applied to a zero standard error, relative to the oracle.
inline constexpr double kSeFloor = 1e-10;

/// Per-batch exact sums of per-replicate rows; replicate r belongs to batch
/// r * batches / n. Merge is associative and commutative.
class BatchedSums {
 public:
  BatchedSums() = default;
  BatchedSums(std::size_t width, int batches, std::int64_t n);

  void add(std::int64_t rep, const std::vector<double>& row);
  void merge(const BatchedSums& other);

  int batches() const { return static_cast<int>(sets_.size()); }
  const SumSet& batch(int b) const { return sets_[b]; }
  SumSet total() const;

 private:
  std::vector<SumSet> sets_;
  std::int64_t n_ = 0;
};

/// Pointwise statistics at interior grid times: deviation mean, variance and
/// absolute mean, bridge mean, covariance and correlation of bridge and
/// process, for every kind; correlation gaps IR - AV; and bridge covariances
/// at the requested (s, t) pairs.
struct PointwiseRequest {
  std::vector<double> times;  ///< strictly inside (0, T)
  std::vector<std::pair<double, double>> cov_pairs;
  bool corr_gaps = false;  ///< gate IR - AV correlation where the gap exceeds 0.005
  bool variance_order = false;  ///< gate adjacent gaps of the sorted deviation variances
};

std::vector<EstimateReport> estimate_pointwise(const Scenario& sc, const PointwiseRequest& req,
                                               const RunConfig& cfg);

struct IntegratedResult {
  std::vector<EstimateReport> reports;  ///< per kind, then paired differences
  double max_abs_av = 0.0;              ///< largest |AV integral| over replicates
  double ir_sd_last = 0.0;              ///< sample SD of the IR bridge at t_{n-1}
  double ir_sd_oracle = 0.0;            ///< sqrt of the bridge variance at t_{n-1}
};

/// E int_0^T deviation^2 dt per kind by trapezoid sums on n and n/2 steps,
/// Richardson-refined; paired kind differences are gated as separations
/// where the oracle gap exceeds `separation_floor` and as agreements
/// otherwise.
IntegratedResult estimate_integrated(const Scenario& sc, int n_steps, const RunConfig& cfg,
                                     double separation_floor = 1e-9);

/// Oracle of the integrated squared deviation; empty when none exists.
std::optional<double> integrated_oracle(const Scenario& sc, Kind kind);

struct RegionPointResult {
  wiener::RegionPoint point;
  std::string oracle_label;
  std::string mc_label;
  std::vector<EstimateReport> reports;
  bool agrees = false;
};

/// Conditional runs at each (b~, d~) with T = 1; the MC ordering must match
/// region_classify with every adjacent gap beyond the gate.
std::vector<RegionPointResult> region_map_mc(const std::vector<wiener::RegionPoint>& points,
                                             int n_steps, const RunConfig& cfg);

struct BackendLevel {
  int n_steps = 0;
  double max_rms = 0.0;
};

struct BackendResult {
  std::string label;
  std::vector<BackendLevel> levels;  ///< coarse to fine
  std::vector<double> rates;         ///< log2 of successive error ratios
  bool monotone = false;
};

/// Euler against exact IR on a fine grid of n_fine steps and strides 4, 2, 1.
BackendResult backend_crosscheck(const paths::ModelSpec& model, double T, int n_fine,
                                 const RunConfig& cfg);

struct Check {
  std::string name;
  bool passed = false;
  Json detail = Json::object();
};

struct SuiteResult {
  std::string suite;
  std::vector<EstimateReport> reports;
  std::vector<Check> checks;
  std::vector<std::string> notes;

  bool passed() const;
  std::vector<std::string> failures() const;
  Json to_json(const RunConfig& cfg) const;
};

struct SuiteOptions {
  RunConfig run;
  int region_grid = 201;
};

inline constexpr const char* kSuites[] = {"wiener-unconditional", "wiener-conditional", "ou",
                                          "regions", "backends", "all"};

/// Runs a named suite; unknown names throw DomainError.
SuiteResult verify_suite(const std::string& name, const SuiteOptions& opt);

/// Midpoint sum of the J integrand over [0, x] with the given panel count,
/// accumulated exactly; an independent check on ou::j_integral.
double j_midpoint(double x, std::int64_t panels);

/// Long-format CSV of reports.
void write_reports_csv(std::ostream& os, const std::vector<EstimateReport>& reports);

}  // namespace bridgelab::mc
