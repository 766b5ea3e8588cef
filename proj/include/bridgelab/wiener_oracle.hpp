#pragma once

// Closed-form statistics of the three Wiener-bridge constructions and of
// their path deviations from the driving Wiener process.
//
// Deviation operations assume a bridge from 0 to b; a bridge from a to b has
// the same deviations as the one from 0 to b - a (see reduced_end).

#include <array>
#include <string>

#include "bridgelab/common.hpp"
#include "bridgelab/scalar_gauss.hpp"

namespace bridgelab::wiener {

using gauss::GaussianMoment;

struct BridgeSpec {
  double a = 0.0;
  double b = 0.0;
  double T = 1.0;
  Kind kind = Kind::AV;

  void validate() const;
};

/// End level of the equivalent bridge started at 0.
inline double reduced_end(const BridgeSpec& s) { return s.b - s.a; }

/// a + (b - a) t / T; the same for every construction.
double bridge_mean(double t, const BridgeSpec& spec);

/// min(s,t) (T - max(s,t)) / T; the same for every construction.
double bridge_cov(double s, double t, double T);

/// Cov(W_t^br, W_t) for 0 <= t < T.
double cov_with_process(Kind kind, double t, double T);

/// Correlation of W_t^br with W_t for 0 < t < T.
double corr_with_process(Kind kind, double t, double T);

/// Law of W_t - W_t^br for a bridge from 0 to b, 0 <= t < T.
GaussianMoment deviation_law(Kind kind, double t, double b, double T);

/// Law of W_t - W_t^br given W_T = d, 0 <= t < T.
GaussianMoment cond_deviation_law(Kind kind, double t, double b, double d, double T);

/// E|W_t - W_t^br|, 0 < t < T.
double expected_abs_dev(Kind kind, double t, double b, double T);

/// E int_0^T (W_t - W_t^br)^2 dt.
double expected_quad_dev(Kind kind, double b, double T);

/// E( int_0^T (W_t - W_t^br)^2 dt | W_T = d ).
double expected_cond_quad_dev(Kind kind, double b, double d, double T);

/// Variance of the IR deviation, t (1 + (T-t)/T) + 2 (T-t) log((T-t)/T).
double ir_deviation_variance(double t, double T);

/// log((T - t) / T), accurate at both ends of [0, T).
double log_remaining(double t, double T);

// ---------------------------------------------------------------------------
// Ordering of the conditional expected quadratic deviations in the
// normalised plane (b / sqrt(T), d / sqrt(T)).

struct RegionPoint {
  double b_tilde = 0.0;
  double d_tilde = 0.0;
};

struct RegionLabel {
  /// Kinds sorted by increasing conditional expected quadratic deviation.
  std::array<Kind, 3> order{Kind::AV, Kind::IR, Kind::ST};
  /// True when some defining inequality holds within 1e-12 of equality.
  bool boundary = false;

  /// "A".."D" for the four named orderings, otherwise a permutation tag such
  /// as "st<av<ir"; "boundary" for boundary points.
  std::string tag() const;
  /// Tag of the ordering, ignoring the boundary flag.
  std::string ordering_tag() const;
};

/// Residuals of the three closed-form inequalities; positive means
/// e_av > e_ir, e_av > e_st and e_st < e_ir respectively.
struct RegionResiduals {
  double av_over_ir;
  double av_over_st;
  double st_under_ir;
};

RegionResiduals region_residuals(RegionPoint p);

RegionLabel region_classify(RegionPoint p);

/// Ordering obtained by direct comparison of expected_cond_quad_dev at T = 1.
RegionLabel region_by_direct_comparison(RegionPoint p);

}  // namespace bridgelab::wiener
