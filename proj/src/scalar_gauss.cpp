#include "bridgelab/scalar_gauss.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace bridgelab::gauss {

namespace {

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw DomainError(std::string(what) + " must be finite");
}

}  // namespace

double std_normal_pdf(double x) {
  return std::exp(-0.5 * x * x) * (0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
}

double std_normal_cdf(double x) {
  require_finite(x, "std_normal_cdf argument");
  // erfc keeps full relative accuracy in the lower tail; the upper tail is
  // obtained by complement, which is exact to within one ulp of 1.
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double folded_mean(const GaussianMoment& m) {
  require_finite(m.mean, "mean");
  if (!(m.variance > 0.0)) throw DomainError("folded_mean requires variance > 0");
  const double sd = std::sqrt(m.variance);
  const double z = m.mean / sd;
  // 2*Phi(z) - 1 == erf(z / sqrt2), which avoids cancellation near z = 0.
  return 2.0 * sd * std_normal_pdf(z) + m.mean * std::erf(z / std::numbers::sqrt2);
}

double tail(const GaussianMoment& m, double x) {
  require_finite(m.mean, "mean");
  if (!(x > 0.0)) throw DomainError("tail requires x > 0");
  if (!(m.variance > 0.0)) throw DomainError("tail requires variance > 0");
  const double sd = std::sqrt(m.variance);
  // 1 - Phi((mu+x)/sd) + Phi((mu-x)/sd), each term written as an upper or
  // lower tail so that neither loses digits.
  const double upper = 0.5 * std::erfc((m.mean + x) / (sd * std::numbers::sqrt2));
  const double lower = 0.5 * std::erfc(-(m.mean - x) / (sd * std::numbers::sqrt2));
  return upper + lower;
}

double second_moment(const GaussianMoment& m) { return m.variance + m.mean * m.mean; }

GaussianMoment condition_on_linear(double mean_x, double mean_s, double var_x,
                                   double var_s, double cov_xs,
                                   double observed_s) {
  if (!(var_s > 0.0)) throw DomainError("condition_on_linear requires var_s > 0");
  if (var_x < 0.0) throw DomainError("condition_on_linear requires var_x >= 0");
  const double bound = var_x * var_s;
  if (cov_xs * cov_xs > bound * (1.0 + 1e-12) + 0.0) {
    throw DomainError("condition_on_linear: covariance violates Cauchy-Schwarz");
  }
  const double gain = cov_xs / var_s;
  GaussianMoment out;
  out.mean = mean_x + (observed_s - mean_s) * gain;
  out.variance = std::max(0.0, var_x - cov_xs * gain);
  return out;
}

}  // namespace bridgelab::gauss
