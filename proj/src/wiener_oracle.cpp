#include "bridgelab/wiener_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace bridgelab::wiener {

namespace {

void require_horizon(double T) {
  if (!(T > 0.0) || !std::isfinite(T)) throw DomainError("horizon T must be positive and finite");
}

void require_closed(double t, double T, const char* what) {
  require_horizon(T);
  if (!(t >= 0.0 && t <= T)) throw DomainError(std::string(what) + ": time outside [0, T]");
}

void require_half_open(double t, double T, const char* what) {
  require_horizon(T);
  if (!(t >= 0.0 && t < T)) throw DomainError(std::string(what) + ": time outside [0, T)");
}

void require_open(double t, double T, const char* what) {
  require_horizon(T);
  if (!(t > 0.0 && t < T)) throw DomainError(std::string(what) + ": time outside (0, T)");
}

}  // namespace

void BridgeSpec::validate() const {
  require_horizon(T);
  if (!std::isfinite(a) || !std::isfinite(b)) throw DomainError("bridge end levels must be finite");
}

double log_remaining(double t, double T) {
  const double x = t / T;
  return x < 0.5 ? std::log1p(-x) : std::log((T - t) / T);
}

double bridge_mean(double t, const BridgeSpec& spec) {
  spec.validate();
  require_closed(t, spec.T, "bridge_mean");
  if (t == spec.T) return spec.b;
  return spec.a + (spec.b - spec.a) * (t / spec.T);
}

double bridge_cov(double s, double t, double T) {
  require_closed(s, T, "bridge_cov");
  require_closed(t, T, "bridge_cov");
  const double lo = std::min(s, t), hi = std::max(s, t);
  return lo * (T - hi) / T;
}

double cov_with_process(Kind kind, double t, double T) {
  require_half_open(t, T, "cov_with_process");
  if (kind == Kind::IR) return -(T - t) * log_remaining(t, T);
  return t * (T - t) / T;
}

double corr_with_process(Kind kind, double t, double T) {
  require_open(t, T, "corr_with_process");
  if (kind == Kind::IR) {
    return std::sqrt(T * (T - t)) / t * -log_remaining(t, T);
  }
  return std::sqrt((T - t) / T);
}

double ir_deviation_variance(double t, double T) {
  require_half_open(t, T, "ir_deviation_variance");
  const double x = t / T;
  if (x < 0.25) {
    // T * sum_{k>=3} 2 x^k / (k (k-1)); the closed form cancels to O(x^3).
    double term = x * x * x;
    double sum = 0.0;
    for (int k = 3; k < 60; ++k) {
      const double add = 2.0 * term / (k * (k - 1.0));
      sum += add;
      if (add < 1e-18 * sum) break;
      term *= x;
    }
    return T * sum;
  }
  return t * (1.0 + (T - t) / T) + 2.0 * (T - t) * log_remaining(t, T);
}

GaussianMoment deviation_law(Kind kind, double t, double b, double T) {
  require_half_open(t, T, "deviation_law");
  GaussianMoment m;
  m.mean = -b * (t / T);
  m.variance = kind == Kind::IR ? ir_deviation_variance(t, T) : t * t / T;
  return m;
}

GaussianMoment cond_deviation_law(Kind kind, double t, double b, double d, double T) {
  require_half_open(t, T, "cond_deviation_law");
  const double x = t / T;
  GaussianMoment m;
  switch (kind) {
    case Kind::AV:
      m.mean = (d - b) * x;
      m.variance = 0.0;
      break;
    case Kind::IR: {
      const double L = log_remaining(t, T);
      const double rem = (T - t);
      m.mean = (d - b) * x + d * (rem / T) * L;
      const double v = 2.0 * t * rem / T + 2.0 * rem * rem / T * L - rem * rem / T * L * L;
      m.variance = std::max(0.0, v);
      break;
    }
    case Kind::ST: {
      const bool late = t >= 0.5 * T;
      const double shift = late ? (2.0 * t - T) : 0.0;
      m.mean = -b * x + d / T * shift;
      m.variance = std::max(0.0, t * t / T - shift * shift / T);
      break;
    }
  }
  return m;
}

double expected_abs_dev(Kind kind, double t, double b, double T) {
  require_open(t, T, "expected_abs_dev");
  return gauss::folded_mean(deviation_law(kind, t, b, T));
}

double expected_quad_dev(Kind kind, double b, double T) {
  require_horizon(T);
  if (kind == Kind::IR) return T / 3.0 * (T / 2.0 + b * b);
  return T / 3.0 * (T + b * b);
}

double expected_cond_quad_dev(Kind kind, double b, double d, double T) {
  require_horizon(T);
  const double db = d - b;
  switch (kind) {
    case Kind::AV:
      return db * db * T / 3.0;
    case Kind::IR:
      return 7.0 / 54.0 * db * db * T + 11.0 / 54.0 * b * b * T - 7.0 / 54.0 * d * b * T +
             T * T / 27.0;
    case Kind::ST:
      return db * db * T / 6.0 + b * b * T / 6.0 - d * b * T / 12.0 + T * T / 6.0;
  }
  return 0.0;
}

// ---------------------------------------------------------------------------

namespace {

constexpr double kBoundaryTol = 1e-12;

std::string order_tag(const std::array<Kind, 3>& o) {
  using K = Kind;
  if (o == std::array{K::AV, K::IR, K::ST}) return "A";
  if (o == std::array{K::IR, K::AV, K::ST}) return "B";
  if (o == std::array{K::IR, K::ST, K::AV}) return "C";
  if (o == std::array{K::AV, K::ST, K::IR}) return "D";
  std::string s;
  for (int i = 0; i < 3; ++i) {
    if (i) s += '<';
    s += to_string(o[i]);
  }
  return s;
}

// less[i][j]: kind i has the smaller deviation than kind j.
RegionLabel label_from_pairs(bool av_lt_ir, bool av_lt_st, bool st_lt_ir, bool boundary) {
  int rank[3] = {0, 0, 0};  // number of kinds smaller than this one
  const int av = 0, ir = 1, st = 2;
  ++rank[av_lt_ir ? ir : av];
  ++rank[av_lt_st ? st : av];
  ++rank[st_lt_ir ? ir : st];
  RegionLabel label;
  label.boundary = boundary;
  bool used[3] = {false, false, false};
  for (int k = 0; k < 3; ++k) {
    if (rank[k] > 2 || used[rank[k]]) {
      // Intransitive comparisons only arise on a boundary.
      label.boundary = true;
      return label;
    }
    used[rank[k]] = true;
    label.order[rank[k]] = static_cast<Kind>(k);
  }
  return label;
}

}  // namespace

std::string RegionLabel::ordering_tag() const { return order_tag(order); }

std::string RegionLabel::tag() const { return boundary ? "boundary" : order_tag(order); }

RegionResiduals region_residuals(RegionPoint p) {
  const double b = p.b_tilde, d = p.d_tilde;
  RegionResiduals r{};
  r.av_over_ir = std::abs(d - 15.0 / 22.0 * b) - std::sqrt(2.0 / 11.0 + (225.0 / 484.0) * b * b);
  r.av_over_st = std::abs(d - 0.75 * b) - std::sqrt(1.0 + (9.0 / 16.0) * b * b);
  const double radicand = (9.0 / 64.0) * b * b - 3.5;
  const double offset = std::abs(d - 0.375 * b);
  // e_st < e_ir needs b^2 >= 224/9; below that the gap stays strictly positive.
  r.st_under_ir = radicand >= 0.0 ? std::sqrt(radicand) - offset
                                  : -(offset + std::sqrt(-radicand));
  return r;
}

RegionLabel region_classify(RegionPoint p) {
  if (!std::isfinite(p.b_tilde) || !std::isfinite(p.d_tilde)) {
    throw DomainError("region_classify requires finite coordinates");
  }
  const RegionResiduals r = region_residuals(p);
  const bool boundary = std::abs(r.av_over_ir) <= kBoundaryTol ||
                        std::abs(r.av_over_st) <= kBoundaryTol ||
                        std::abs(r.st_under_ir) <= kBoundaryTol;
  return label_from_pairs(r.av_over_ir < 0.0, r.av_over_st < 0.0, r.st_under_ir > 0.0, boundary);
}

RegionLabel region_by_direct_comparison(RegionPoint p) {
  const double e_av = expected_cond_quad_dev(Kind::AV, p.b_tilde, p.d_tilde, 1.0);
  const double e_ir = expected_cond_quad_dev(Kind::IR, p.b_tilde, p.d_tilde, 1.0);
  const double e_st = expected_cond_quad_dev(Kind::ST, p.b_tilde, p.d_tilde, 1.0);
  const bool tie = e_av == e_ir || e_av == e_st || e_st == e_ir;
  return label_from_pairs(e_av < e_ir, e_av < e_st, e_st < e_ir, tie);
}

}  // namespace bridgelab::wiener
