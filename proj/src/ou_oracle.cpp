#include "bridgelab/ou_oracle.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <utility>

namespace bridgelab::ou {

namespace {

// Closed forms whose cancelling terms exceed the result by more than this
// factor are replaced by a well-conditioned integral.
constexpr double kCancellationLimit = 100.0;

void require_closed(double t, double T, const char* what) {
  if (!(t >= 0.0 && t <= T)) throw DomainError(std::string(what) + ": time outside [0, T]");
}

void require_half_open(double t, double T, const char* what) {
  if (!(t >= 0.0 && t < T)) throw DomainError(std::string(what) + ": time outside [0, T)");
}

// sinh(2x) - 2x
double sinh2_excess(double x) {
  if (std::abs(x) < 0.5) {
    const double y = 2.0 * x, y2 = y * y;
    double term = y * y2 / 6.0, sum = 0.0;
    for (int k = 2; k < 20; ++k) {
      sum += term;
      term *= y2 / ((2.0 * k) * (2.0 * k + 1.0));
    }
    return sum;
  }
  return std::sinh(2.0 * x) - 2.0 * x;
}

// tanh(y) - y
double tanh_excess(double y) {
  if (std::abs(y) < 0.1) {
    static constexpr std::array<double, 7> c = {
        -1.0 / 3.0,           2.0 / 15.0,           -17.0 / 315.0,          62.0 / 2835.0,
        -1382.0 / 155925.0,   21844.0 / 6081075.0,  -929569.0 / 638512875.0};
    const double y2 = y * y;
    double acc = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * y2 + *it;
    return acc * y * y2;
  }
  return std::tanh(y) - y;
}

// -1 + x coth x - x^2/2 + x/2 - 1/4 + e^{-2x}/4
double e_term(double x) {
  if (std::abs(x) < 0.2) {
    static constexpr std::array<double, 20> c = {
        1.0 / 3.0,
        -1.0 / 3.0,
        13.0 / 90.0,
        -1.0 / 15.0,
        23.0 / 945.0,
        -2.0 / 315.0,
        13.0 / 9450.0,
        -1.0 / 2835.0,
        43.0 / 467775.0,
        -2.0 / 155925.0,
        -17.0 / 638512875.0,
        -2.0 / 6081075.0,
        34.0 / 127702575.0,
        -4.0 / 638512875.0,
        -997.0 / 46520223750.0,
        -1.0 / 10854718875.0,
        88133.0 / 38979295480125.0,
        -2.0 / 1856156927625.0,
        -349057.0 / 1531329465290625.0,
        -2.0 / 194896477400625.0};
    double acc = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + *it;
    return acc * x * x;
  }
  return -1.0 + x / std::tanh(x) - 0.5 * x * x + 0.5 * x - 0.25 + 0.25 * std::exp(-2.0 * x);
}

}  // namespace

void ProcessParams::validate() const {
  if (!std::isfinite(q) || q == 0.0) throw DomainError("OU rate q must be finite and nonzero");
  if (!std::isfinite(sigma) || !(sigma > 0.0)) throw DomainError("OU sigma must be positive");
}

void TimeChange::validate() const {
  params.validate();
  if (!std::isfinite(T) || !(T > 0.0)) throw DomainError("horizon T must be positive and finite");
}

double sinh_ratio(double y, double z) {
  if (z == 0.0) throw DomainError("sinh_ratio: zero denominator");
  if (y == 0.0) return 0.0;
  const double ay = std::abs(y), az = std::abs(z);
  const double mag = std::exp(ay - az) * (std::expm1(-2.0 * ay) / std::expm1(-2.0 * az));
  return ((y < 0.0) != (z < 0.0)) ? -mag : mag;
}

double log_sinh_ratio(double y, double z) {
  const double ay = std::abs(y), az = std::abs(z);
  return (ay - az) + std::log(-std::expm1(-2.0 * ay)) - std::log(-std::expm1(-2.0 * az));
}

double kappa(double t, double q) {
  if (!std::isfinite(q) || q == 0.0) throw DomainError("kappa: q must be finite and nonzero");
  if (!std::isfinite(t)) throw DomainError("kappa: non-finite time");
  return -std::expm1(-2.0 * q * t) / (2.0 * q);
}

double kappa_star(double t, const TimeChange& tc) {
  tc.validate();
  require_half_open(t, tc.T, "kappa_star");
  if (t == 0.0) return 0.0;
  const double q = tc.q();
  return std::sinh(q * t) / q * sinh_ratio(q * tc.T, q * (tc.T - t));
}

double t_star(const TimeChange& tc) {
  tc.validate();
  const double q = tc.q(), T = tc.T;
  const double kT = kappa(T, q);
  const double c = T * kT / (T + kT);
  const double ts = -std::log1p(-2.0 * q * c) / (2.0 * q);
  if (!(ts > 0.0 && ts < T) || std::abs(kappa_star(ts, tc) - T) > 1e-10 * std::max(1.0, T)) {
    std::ostringstream msg;
    msg << "t_star: kappa_star(" << ts << ") misses T=" << T << " (q=" << q << ")";
    throw NumericalError(msg.str());
  }
  return ts;
}

double process_variance(double t, const ProcessParams& p) {
  p.validate();
  if (!(t >= 0.0)) throw DomainError("process_variance: negative time");
  return p.sigma * p.sigma * std::expm1(2.0 * p.q * t) / (2.0 * p.q);
}

double reduced_end(double a, double b, const TimeChange& tc) {
  tc.validate();
  return b - a * std::exp(tc.q() * tc.T);
}

double ou_bridge_mean(double t, double a, double b, const TimeChange& tc) {
  tc.validate();
  require_closed(t, tc.T, "ou_bridge_mean");
  if (t == 0.0) return a;
  if (t == tc.T) return b;
  const double q = tc.q(), T = tc.T;
  return a * sinh_ratio(q * (T - t), q * T) + b * sinh_ratio(q * t, q * T);
}

double ou_bridge_cov(double s, double t, const TimeChange& tc) {
  tc.validate();
  require_closed(s, tc.T, "ou_bridge_cov");
  require_closed(t, tc.T, "ou_bridge_cov");
  const double lo = std::min(s, t), hi = std::max(s, t);
  const double q = tc.q(), T = tc.T, s2 = tc.sigma() * tc.sigma();
  return s2 * std::sinh(q * lo) / q * sinh_ratio(q * (T - hi), q * T);
}

double ou_bridge_cov_via(Kind kind, double s, double t, const TimeChange& tc) {
  tc.validate();
  require_half_open(s, tc.T, "ou_bridge_cov_via");
  require_half_open(t, tc.T, "ou_bridge_cov_via");
  const double lo = std::min(s, t), hi = std::max(s, t);
  const double q = tc.q(), T = tc.T, s2 = tc.sigma() * tc.sigma();
  switch (kind) {
    case Kind::AV: {
      // Cov(U0_u, U0_v) = sigma^2 e^{qv} sinh(qu)/q for u <= v
      auto c = [&](double u, double v) { return s2 * std::exp(q * v) * std::sinh(q * u) / q; };
      const double r_lo = std::sinh(q * lo) / std::sinh(q * T);
      const double r_hi = std::sinh(q * hi) / std::sinh(q * T);
      return c(lo, hi) - r_hi * c(lo, T) - r_lo * c(hi, T) + r_lo * r_hi * c(T, T);
    }
    case Kind::IR: {
      // (coth(q(T-lo)) - coth(qT)) / q without the cancellation
      const double var_b =
          std::sinh(q * lo) / (q * std::sinh(q * (T - lo)) * std::sinh(q * T));
      return s2 * std::sinh(q * (T - lo)) * std::sinh(q * (T - hi)) * var_b;
    }
    case Kind::ST: {
      const double kT = kappa(T, q);
      const double f_lo = (kT - kappa(lo, q)) / kT;
      const double f_hi = (kT - kappa(hi, q)) / kT;
      return s2 * std::exp(q * (lo + hi)) * f_lo * f_hi * kappa_star(lo, tc);
    }
  }
  return 0.0;
}

double ou_cov_with_process(Kind kind, double t, const TimeChange& tc) {
  tc.validate();
  if (!(t > 0.0 && t < tc.T)) throw DomainError("ou_cov_with_process: time outside (0, T)");
  const double q = tc.q(), T = tc.T, s2 = tc.sigma() * tc.sigma();
  const double ra = sinh_ratio(q * (T - t), q * T);
  switch (kind) {
    case Kind::AV:
      return s2 * std::sinh(q * t) / q * ra;
    case Kind::IR:
      return s2 * kappa(T - t, q) * (q * t + log_sinh_ratio(q * T, q * (T - t)));
    case Kind::ST:
      return s2 * std::expm1(q * t) / q * ra;
  }
  return 0.0;
}

namespace {

double av_variance(double t, const TimeChange& tc) {
  const double q = tc.q(), T = tc.T, s2 = tc.sigma() * tc.sigma();
  return s2 / q * std::exp(q * T) * std::sinh(q * t) * sinh_ratio(q * t, q * T);
}

// Var(U0_t - U^ir_t) = sigma^2 int_0^t g(s)^2 ds with
// g(s) = e^{q(T-s)} sinh(q(t-s)) / sinh(q(T-s)), free of cancellation.
double ir_variance_by_quadrature(double t, const TimeChange& tc) {
  const double q = tc.q(), T = tc.T, s2 = tc.sigma() * tc.sigma();
  auto g2 = [&](double s) {
    const double g = -2.0 * std::sinh(q * (t - s)) / std::expm1(-2.0 * q * (T - s));
    return g * g;
  };
  quad::Options opt;
  opt.rel_tol = 1e-14;
  opt.abs_tol = 0.0;
  return s2 * quad::integrate(g2, 0.0, t, opt).value;
}

// Closed form of the IR variance plus the magnitude of its cancelling terms.
std::pair<double, double> ir_variance_closed(double t, const TimeChange& tc) {
  const double q = tc.q(), T = tc.T, s2 = tc.sigma() * tc.sigma();
  const double v_av = av_variance(t, tc);
  const double L = log_sinh_ratio(q * T, q * (T - t));
  const double rb = sinh_ratio(q * t, q * T);
  const double lead = 2.0 * s2 / q * std::sinh(q * (T - t));
  const double decay = std::exp(-q * (T - t));
  const double extra = lead * (rb - decay * (q * t + L));
  const double scale =
      std::abs(v_av) + std::abs(lead) * (std::abs(rb) + decay * (std::abs(q * t) + std::abs(L)));
  return {v_av + extra, scale};
}

}  // namespace

double ou_deviation_variance_rearranged(Kind kind, double t, const TimeChange& tc) {
  tc.validate();
  require_half_open(t, tc.T, "ou_deviation_variance_rearranged");
  if (t == 0.0) return 0.0;
  const double q = tc.q(), T = tc.T, s2 = tc.sigma() * tc.sigma();
  const double v_av = av_variance(t, tc);
  switch (kind) {
    case Kind::AV:
      return v_av;
    case Kind::IR:
      return ir_variance_closed(t, tc).first;
    case Kind::ST: {
      const double ra = sinh_ratio(q * (T - t), q * T);
      const double sh = std::sinh(0.5 * q * t);
      return v_av - 4.0 * s2 / q * ra * sh * sh;
    }
  }
  return 0.0;
}

double ou_deviation_variance(Kind kind, double t, const TimeChange& tc) {
  if (kind != Kind::IR) return ou_deviation_variance_rearranged(kind, t, tc);
  tc.validate();
  require_half_open(t, tc.T, "ou_deviation_variance");
  if (t == 0.0) return 0.0;
  const auto [value, scale] = ir_variance_closed(t, tc);
  if (scale <= kCancellationLimit * std::abs(value)) return value;
  return ir_variance_by_quadrature(t, tc);
}

double ou_deviation_variance_long(Kind kind, double t, const TimeChange& tc) {
  tc.validate();
  require_half_open(t, tc.T, "ou_deviation_variance_long");
  const double q = tc.q(), T = tc.T, s2 = tc.sigma() * tc.sigma();
  const double r = std::sinh(q * (T - t)) / std::sinh(q * T);
  const double lead = std::sinh(q * t) * (std::exp(q * t) + r);
  switch (kind) {
    case Kind::AV:
      return s2 * std::exp(q * T) / q * std::sinh(q * t) * std::sinh(q * t) / std::sinh(q * T);
    case Kind::IR: {
      const double L = std::log(std::sinh(q * T) / std::sinh(q * (T - t)));
      return s2 / q *
             (lead - 2.0 * std::exp(-q * (T - t)) * std::sinh(q * (T - t)) * (q * t + L));
    }
    case Kind::ST:
      return s2 / q * (lead + 2.0 * (1.0 - std::exp(q * t)) * r);
  }
  return 0.0;
}

double variance_form_mismatch(Kind kind, double t, const TimeChange& tc) {
  const double closed = ou_deviation_variance_rearranged(kind, t, tc);
  const double alt = ou_deviation_variance_long(kind, t, tc);
  const double q = tc.q(), s2 = tc.sigma() * tc.sigma();
  double scale = std::abs(s2 / q * std::sinh(q * t) * std::exp(q * t)) + std::abs(av_variance(t, tc));
  if (kind == Kind::IR && t > 0.0) scale = std::max(scale, ir_variance_closed(t, tc).second);
  if (scale == 0.0) return std::abs(alt - closed);
  return std::abs(alt - closed) / scale;
}

GaussianMoment ou_deviation_law(Kind kind, double t, double b, const TimeChange& tc) {
  GaussianMoment m;
  m.variance = ou_deviation_variance(kind, t, tc);
  m.mean = -b * sinh_ratio(tc.q() * t, tc.q() * tc.T);
#ifndef NDEBUG
  if (variance_form_mismatch(kind, t, tc) > 1e-12) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "ou_deviation_law: variance forms disagree for kind " << to_string(kind)
        << " at t=" << t << ": " << ou_deviation_variance_rearranged(kind, t, tc) << " vs "
        << ou_deviation_variance_long(kind, t, tc);
    throw NumericalError(msg.str());
  }
#endif
  m.variance = std::max(0.0, m.variance);
  return m;
}

quad::Result j_integral(double x) {
  if (!std::isfinite(x)) throw DomainError("j_integral: non-finite argument");
  if (x == 0.0) return {};
  auto f = [x](double s) {
    if (s <= 0.0) return 0.0;
    return -std::expm1(-2.0 * x * s) * log_sinh_ratio(x, x * s);
  };
  quad::Options opt;
  opt.rel_tol = 1e-13;
  opt.abs_tol = 1e-14 * std::min(1.0, x * x);
  quad::Result r = quad::integrate(f, 0.0, 1.0, opt);
  r.value *= x;
  r.abs_error *= std::abs(x);
  return r;
}

double mean_term(double b, const TimeChange& tc) {
  tc.validate();
  const double q = tc.q(), x = q * tc.T;
  const double sh = std::sinh(x);
  return b * b / (4.0 * q) * sinh2_excess(x) / (sh * sh);
}

namespace {

double av_variance_integral(const TimeChange& tc) {
  const double q = tc.q(), x = q * tc.T, s2 = tc.sigma() * tc.sigma();
  return s2 * std::exp(x) / (4.0 * q * q) * sinh2_excess(x) / std::sinh(x);
}

// int_0^T Var(U0_t - U^ir_t) dt
//   = sigma^2 int_0^T (sinh(2qw) - 2qw) / (q expm1(-2qw)^2) dw,
// used where e_term and J nearly cancel (qT well below zero).
double ir_variance_integral(const TimeChange& tc) {
  const double q = tc.q(), s2 = tc.sigma() * tc.sigma();
  auto f = [q](double w) {
    if (w <= 0.0) return 0.0;
    const double em = std::expm1(-2.0 * q * w);
    return sinh2_excess(q * w) / (q * em * em);
  };
  quad::Options opt;
  opt.rel_tol = 1e-14;
  opt.abs_tol = 0.0;
  return s2 * quad::integrate(f, 0.0, tc.T, opt).value;
}

double quad_dev(Kind kind, double b, const TimeChange& tc, bool with_st_mean) {
  tc.validate();
  const double q = tc.q(), x = q * tc.T, s2 = tc.sigma() * tc.sigma();
  const double m = mean_term(b, tc);
  const double v_av = av_variance_integral(tc);
  switch (kind) {
    case Kind::AV:
      return m + v_av;
    case Kind::IR: {
      const double e = e_term(x), j = j_integral(x).value;
      if (std::abs(e) + std::abs(j) <= kCancellationLimit * std::abs(e - j)) {
        return m + v_av + s2 / (q * q) * (e - j);
      }
      return m + ir_variance_integral(tc);
    }
    case Kind::ST:
      return (with_st_mean ? m : 0.0) + v_av + 2.0 * s2 / (q * q) * tanh_excess(0.5 * x);
  }
  return 0.0;
}

}  // namespace

double ou_expected_quad_dev(Kind kind, double b, const TimeChange& tc) {
  return quad_dev(kind, b, tc, true);
}

double ou_expected_quad_dev_printed(Kind kind, double b, const TimeChange& tc) {
  return quad_dev(kind, b, tc, false);
}

}  // namespace bridgelab::ou
