#pragma once

// Scalar Gaussian utilities shared by the Wiener and OU oracles.

#include "bridgelab/common.hpp"

namespace bridgelab::gauss {

/// Law of a scalar Gaussian variable.
struct GaussianMoment {
  double mean = 0.0;
  double variance = 0.0;  ///< always >= 0
};

/// Standard normal density.
double std_normal_pdf(double x);

/// Standard normal distribution function, evaluated through erfc.
double std_normal_cdf(double x);

/// E|Y| for Y ~ N(mean, variance); requires variance > 0.
double folded_mean(const GaussianMoment& m);

/// P(|Y| > x) for Y ~ N(mean, variance); requires x > 0 and variance > 0.
double tail(const GaussianMoment& m, double x);

/// E(Y^2) = variance + mean^2.
double second_moment(const GaussianMoment& m);

/// Law of X given S = observed_s for a jointly Gaussian pair (X, S).
///
/// Accepts cov_xs^2 <= var_x * var_s * (1 + 1e-12) and clamps the
/// conditional variance at zero; larger violations are a DomainError.
GaussianMoment condition_on_linear(double mean_x, double mean_s, double var_x,
                                   double var_s, double cov_xs,
                                   double observed_s);

}  // namespace bridgelab::gauss
