#pragma once

// Closed-form statistics of Ornstein-Uhlenbeck bridges dU = qU dt + sigma dW.
//
// As in the Wiener case, deviation operations take a bridge started at 0.
// A bridge from a to b has the deviations of the bridge from 0 to
// b - a e^{qT} (see reduced_end).

#include "bridgelab/common.hpp"
#include "bridgelab/quadrature.hpp"
#include "bridgelab/scalar_gauss.hpp"

namespace bridgelab::ou {

using gauss::GaussianMoment;

struct ProcessParams {
  double q = 1.0;
  double sigma = 1.0;

  void validate() const;
};

struct TimeChange {
  ProcessParams params;
  double T = 1.0;

  void validate() const;
  double q() const { return params.q; }
  double sigma() const { return params.sigma; }
};

// Hyperbolic helpers, overflow-free for large |y|, |z|.

/// sinh(y) / sinh(z) for z != 0.
double sinh_ratio(double y, double z);
/// log(sinh(y) / sinh(z)) for y, z of equal sign.
double log_sinh_ratio(double y, double z);

/// (1 - e^{-2qt}) / (2q).
double kappa(double t, double q);

/// kappa(t) kappa(T) / (kappa(T) - kappa(t)) for 0 <= t < T.
double kappa_star(double t, const TimeChange& tc);

/// The time in (0, T) at which kappa_star reaches T.
double t_star(const TimeChange& tc);

/// Var(U^0_t) = sigma^2 (e^{2qt} - 1) / (2q).
double process_variance(double t, const ProcessParams& p);

/// End level of the equivalent bridge started at 0.
double reduced_end(double a, double b, const TimeChange& tc);

/// a sinh(q(T-t))/sinh(qT) + b sinh(qt)/sinh(qT), 0 <= t <= T.
double ou_bridge_mean(double t, double a, double b, const TimeChange& tc);

/// sigma^2/q sinh(q min) sinh(q(T - max)) / sinh(qT), 0 <= s, t <= T.
double ou_bridge_cov(double s, double t, const TimeChange& tc);

/// Bridge covariance computed from one construction's own representation
/// (AV from the process covariance, IR from the stochastic integral, ST from
/// the time-changed Wiener covariance); 0 <= s, t < T.
double ou_bridge_cov_via(Kind kind, double s, double t, const TimeChange& tc);

/// Cov(U^br_t, U^0_t), 0 < t < T. Deterministic shifts a, b do not enter.
double ou_cov_with_process(Kind kind, double t, const TimeChange& tc);

/// Variance of U^0_t - U^br_t, 0 <= t < T. Uses the short closed forms below;
/// for IR, where those cancel badly (q(T - t) well below zero, or t near 0),
/// the variance is integrated from its stochastic-integral kernel instead.
double ou_deviation_variance(Kind kind, double t, const TimeChange& tc);

/// Short closed forms: AV, and IR and ST written as AV plus a correction.
double ou_deviation_variance_rearranged(Kind kind, double t, const TimeChange& tc);

/// The same variance transcribed term by term in its long hyperbolic form.
double ou_deviation_variance_long(Kind kind, double t, const TimeChange& tc);

/// |long - rearranged| relative to the size of the terms both forms combine.
double variance_form_mismatch(Kind kind, double t, const TimeChange& tc);

/// Law of U^0_t - U^br_t for a bridge from 0 to b, 0 <= t < T. Debug builds
/// check the two variance forms against each other.
GaussianMoment ou_deviation_law(Kind kind, double t, double b, const TimeChange& tc);

/// J(x) = int_0^x (1 - e^{-2u}) log(sinh x / sinh u) du, signed orientation
/// for x < 0.
quad::Result j_integral(double x);

/// b^2/(4q) (sinh 2qT - 2qT) / sinh^2 qT, the integrated squared mean.
double mean_term(double b, const TimeChange& tc);

/// E int_0^T (U^0_t - U^br_t)^2 dt for a bridge from 0 to b.
double ou_expected_quad_dev(Kind kind, double b, const TimeChange& tc);

/// Variant whose ST value leaves out mean_term; AV and IR agree with
/// ou_expected_quad_dev.
double ou_expected_quad_dev_printed(Kind kind, double b, const TimeChange& tc);

}  // namespace bridgelab::ou
