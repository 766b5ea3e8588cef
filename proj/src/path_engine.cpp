#include "bridgelab/path_engine.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <sstream>

namespace bridgelab::paths {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr long double kPivotTol = 1e-10L;

// log|tanh(y)|, accurate also where tanh(y) is close to +-1
double log_abs_tanh(double y) {
  const double e = std::exp(-2.0 * std::abs(y));
  if (e < 0.5) return std::log1p(-e) - std::log1p(e);
  return std::log(std::abs(std::tanh(y)));
}

// Antiderivative in w of 1 / (1 - e^{-2qw}), w > 0.
double inv_one_minus_exp(double w, double q) {
  if (q > 0.0) return w + std::log(-std::expm1(-2.0 * q * w)) / (2.0 * q);
  const double x = std::exp(2.0 * q * w);
  const double l = x < 0.5 ? std::log1p(-x) : std::log(-std::expm1(2.0 * q * w));
  return l / (2.0 * q);
}

// 16-point Gauss-Legendre rule, nonnegative half.
constexpr long double kGaussNodes[8] = {
    0.0950125098376374401853193354249581L, 0.2816035507792589132304605014604961L,
    0.4580167776572273863424194429835775L, 0.6178762444026437484466717640487910L,
    0.7554044083550030338951011948474422L, 0.8656312023878317438804678977123931L,
    0.9445750230732325760779884155346083L, 0.9894009349916499325961541734503326L};
constexpr long double kGaussWeights[8] = {
    0.1894506104550684962853967232082831L, 0.1826034150449235888667636679692199L,
    0.1691565193950025381893120790303600L, 0.1495959888165767320815017305474785L,
    0.1246289712555338720524762821920164L, 0.0951585116824927848099251076022462L,
    0.0622535239386478928628438369943776L, 0.0271524594117540948517805724560181L};

// Lower-triangular factor of the OU increment covariance on [u, v] from its
// square root: rows sqrt(w_j) (1, e^{-q s_j}, 1 / sinh(q(T - s_j))) at
// Gauss-Legendre nodes, then Householder QR. The pieces shrink geometrically
// towards T so each stays within half its distance to the pole. PSD by
// construction, which matters because the coordinates are nearly collinear
// on short steps.
void ou_sqrt_factor(double u, double v, double T, double q, int d, long double L[3][3],
                    long double diag[3]) {
  std::vector<std::array<long double, 3>> rows;
  const long double ql = q;
  auto piece = [&](long double lo, long double hi) {
    const long double mid = 0.5L * (lo + hi), half = 0.5L * (hi - lo);
    for (int k = 0; k < 8; ++k) {
      for (int sign : {-1, 1}) {
        const long double s = mid + sign * half * kGaussNodes[k];
        const long double sw = std::sqrt(half * kGaussWeights[k]);
        std::array<long double, 3> r{sw, sw * std::exp(-ql * s), 0.0L};
        if (d == 3) r[2] = sw / std::sinh(ql * (static_cast<long double>(T) - s));
        rows.push_back(r);
      }
    }
  };
  if (d == 3) {
    long double hi = v;
    while (hi > u) {
      const long double lo = std::max<long double>(u, hi - 0.5L * (T - hi));
      piece(lo, hi);
      hi = lo;
    }
  } else {
    piece(u, v);
  }
  const std::size_t m = rows.size();
  for (int c = 0; c < d; ++c) {
    diag[c] = 0.0L;
    for (const auto& r : rows) diag[c] += r[c] * r[c];
  }
  // Householder QR of the m x d matrix; R^T is the factor.
  for (int c = 0; c < d; ++c) {
    long double norm = 0.0L;
    for (std::size_t j = c; j < m; ++j) norm += rows[j][c] * rows[j][c];
    norm = std::sqrt(norm);
    if (norm == 0.0L) continue;
    const long double alpha = rows[c][c] > 0.0L ? -norm : norm;
    std::vector<long double> w(m, 0.0L);
    for (std::size_t j = c; j < m; ++j) w[j] = rows[j][c];
    w[c] -= alpha;
    long double wn = 0.0L;
    for (std::size_t j = c; j < m; ++j) wn += w[j] * w[j];
    if (wn == 0.0L) continue;
    for (int cc = c; cc < d; ++cc) {
      long double dot = 0.0L;
      for (std::size_t j = c; j < m; ++j) dot += w[j] * rows[j][cc];
      const long double f = 2.0L * dot / wn;
      for (std::size_t j = c; j < m; ++j) rows[j][cc] -= f * w[j];
    }
  }
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) L[r][c] = 0.0L;
  }
  for (int r = 0; r < d; ++r) {
    const long double sign = rows[r][r] < 0.0L ? -1.0L : 1.0L;
    for (int c = r; c < d; ++c) L[c][r] = sign * rows[r][c];
  }
}

void fmt(std::ostream& os, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  os << buf;
}

}  // namespace

TimeGrid TimeGrid::uniform(double T, int n_steps) {
  if (!(T > 0.0) || !std::isfinite(T)) throw DomainError("grid horizon must be positive");
  if (n_steps < 1) throw DomainError("grid needs at least one step");
  TimeGrid g;
  g.T = T;
  g.points.resize(n_steps + 1);
  for (int k = 0; k <= n_steps; ++k) g.points[k] = T * (static_cast<double>(k) / n_steps);
  g.points.back() = T;
  return g;
}

TimeGrid TimeGrid::from_points(std::vector<double> points) {
  if (points.size() < 2 || points.front() != 0.0) {
    throw DomainError("grid must start at 0 and contain at least two points");
  }
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (!(points[i] > points[i - 1]) || !std::isfinite(points[i])) {
      throw DomainError("grid points must increase strictly");
    }
  }
  TimeGrid g;
  g.T = points.back();
  g.points = std::move(points);
  return g;
}

void ModelSpec::validate() const {
  if (!std::isfinite(a) || !std::isfinite(b)) throw DomainError("end levels must be finite");
  if (process == Process::OU) ou.validate();
}

// ---------------------------------------------------------------------------

DriverPlan DriverPlan::wiener(const TimeGrid& grid) { return wiener(grid, {}); }

DriverPlan DriverPlan::wiener(const TimeGrid& grid, std::vector<double> extra_times) {
  DriverPlan p;
  p.process_ = Process::Wiener;
  p.grid_ = grid;
  const double T = grid.T;
  std::vector<double> st(grid.points.size() - 1);
  for (std::size_t k = 0; k + 1 < grid.points.size(); ++k) {
    const double t = grid.points[k];
    st[k] = t * T / (T - t);
  }
  p.merge_times(extra_times, st);
  p.factorize();
  return p;
}

DriverPlan DriverPlan::ou(const TimeGrid& grid, const ou::ProcessParams& params) {
  params.validate();
  DriverPlan p;
  p.process_ = Process::OU;
  p.grid_ = grid;
  p.params_ = params;
  const ou::TimeChange tc{params, grid.T};
  std::vector<double> st(grid.points.size() - 1);
  for (std::size_t k = 0; k + 1 < grid.points.size(); ++k) {
    st[k] = ou::kappa_star(grid.points[k], tc);
  }
  p.merge_times({}, st);
  p.factorize();
  const double q = params.q, T = grid.T;
  p.ou_coeffs_.resize(grid.points.size());
  for (std::size_t k = 0; k < grid.points.size(); ++k) {
    const double t = grid.points[k];
    auto& c = p.ou_coeffs_[k];
    c.ra = ou::sinh_ratio(q * (T - t), q * T);
    c.rb = ou::sinh_ratio(q * t, q * T);
    c.eqt = std::exp(q * t);
    c.shr = std::sinh(q * (T - t));
  }
  return p;
}

void DriverPlan::merge_times(const std::vector<double>& extra, const std::vector<double>& st) {
  for (double x : extra) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw DomainError("driver times must be finite and >= 0");
  }
  times_ = grid_.points;
  times_.insert(times_.end(), extra.begin(), extra.end());
  times_.insert(times_.end(), st.begin(), st.end());
  std::sort(times_.begin(), times_.end());
  times_.erase(std::unique(times_.begin(), times_.end()), times_.end());
  auto locate = [&](double x) {
    return static_cast<std::size_t>(std::lower_bound(times_.begin(), times_.end(), x) -
                                    times_.begin());
  };
  grid_index_.resize(grid_.points.size());
  for (std::size_t k = 0; k < grid_.points.size(); ++k) grid_index_[k] = locate(grid_.points[k]);
  st_index_.assign(grid_.points.size(), 0);
  for (std::size_t k = 0; k < st.size(); ++k) st_index_[k] = locate(st[k]);
}

std::vector<double> DriverPlan::interval_covariance(std::size_t i) const {
  const double u = times_[i], v = times_[i + 1], h = v - u, T = grid_.T;
  const int d = dim_[i];
  std::vector<double> c(d * d);
  c[0] = h;
  if (d == 1) return c;
  if (process_ == Process::Wiener) {
    const double cwm = std::log1p(h / (T - v));
    c[1] = c[2] = cwm;
    c[3] = h / ((T - u) * (T - v));
    return c;
  }
  const double q = params_.q;
  const double va = std::exp(-q * (u + v)) * std::sinh(q * h) / q;
  const double cwa = -std::exp(-q * u) * std::expm1(-q * h) / q;
  if (d == 2) {
    c[1] = c[2] = cwa;
    c[3] = va;
    return c;
  }
  const double vb = std::sinh(q * h) / (q * std::sinh(q * (T - v)) * std::sinh(q * (T - u)));
  const double cwb = (log_abs_tanh(0.5 * q * (T - u)) - log_abs_tanh(0.5 * q * (T - v))) / q;
  const double cab =
      2.0 * std::exp(-q * T) * (inv_one_minus_exp(T - u, q) - inv_one_minus_exp(T - v, q));
  c = {h, cwa, cwb, cwa, va, cab, cwb, cab, vb};
  return c;
}

void DriverPlan::store_factor(std::size_t i, const long double L[3][3]) {
  double* f = &factor_[6 * i];
  f[0] = static_cast<double>(L[0][0]);
  f[1] = static_cast<double>(L[1][0]);
  f[2] = static_cast<double>(L[1][1]);
  f[3] = static_cast<double>(L[2][0]);
  f[4] = static_cast<double>(L[2][1]);
  f[5] = static_cast<double>(L[2][2]);
}

void DriverPlan::factorize() {
  const std::size_t n = intervals();
  const std::size_t ti = t_index();
  const double T = grid_.T;
  dim_.resize(n);
  factor_.assign(6 * n, 0.0);
  cov_wt_.assign(2 * n, 0.0);
  min_pivot_ratio_ = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const bool before_t = i + 1 < ti;
    const bool ends_at_t = i + 1 == ti;
    if (process_ == Process::Wiener) {
      dim_[i] = before_t ? 2 : 1;
    } else {
      dim_[i] = before_t ? 3 : (ends_at_t ? 2 : 1);
    }
    const int d = dim_[i];
    long double L[3][3] = {};
    if (process_ == Process::OU && d > 1) {
      long double diag[3];
      ou_sqrt_factor(times_[i], times_[i + 1], T, params_.q, d, L, diag);
      for (int r = 0; r < d; ++r) {
        min_pivot_ratio_ = std::min(min_pivot_ratio_, static_cast<double>(L[r][r] * L[r][r] / diag[r]));
      }
      store_factor(i, L);
      continue;
    }
    const std::vector<double> c = interval_covariance(i);
    for (int r = 0; r < d; ++r) {
      for (int col = 0; col <= r; ++col) {
        long double sum = c[r * d + col];
        for (int k = 0; k < col; ++k) sum -= L[r][k] * L[col][k];
        if (r == col) {
          const long double diag = c[r * d + r];
          if (!(diag > 0.0L)) {
            std::ostringstream msg;
            msg << "driver plan: nonpositive variance on [" << times_[i] << ", " << times_[i + 1]
                << "]";
            throw NumericalError(msg.str());
          }
          if (sum < 0.0L) {
            if (sum < -kPivotTol * diag) {
              std::ostringstream msg;
              msg.precision(17);
              msg << "driver plan: covariance not positive semidefinite on [" << times_[i]
                  << ", " << times_[i + 1] << "], pivot " << static_cast<double>(sum / diag);
              throw NumericalError(msg.str());
            }
            sum = 0.0L;
          }
          min_pivot_ratio_ = std::min(min_pivot_ratio_, static_cast<double>(sum / diag));
          L[r][r] = std::sqrt(sum);
        } else {
          L[r][col] = L[col][col] > 0.0L ? sum / L[col][col] : 0.0L;
        }
      }
    }
    store_factor(i, L);
    if (process_ == Process::Wiener && times_[i + 1] <= T) {
      cov_wt_[2 * i] = c[0];
      if (d == 2) cov_wt_[2 * i + 1] = c[1];
    }
  }
}

// ---------------------------------------------------------------------------

void generate(const DriverPlan& plan, rng::SeedSpec seed, Driver& drv) {
  const std::size_t n = plan.intervals();
  drv.dw.resize(n);
  drv.d1.resize(n);
  drv.d2.resize(n);
  drv.pinned_endpoint.reset();
  rng::NormalStream ns(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const double* f = plan.factor(i);
    const int d = plan.dim(i);
    const double z0 = ns.next();
    drv.dw[i] = f[0] * z0;
    if (d >= 2) {
      const double z1 = ns.next();
      drv.d1[i] = f[1] * z0 + f[2] * z1;
      if (d == 3) {
        const double z2 = ns.next();
        drv.d2[i] = f[3] * z0 + f[4] * z1 + f[5] * z2;
      } else {
        drv.d2[i] = 0.0;
      }
    } else {
      drv.d1[i] = 0.0;
      drv.d2[i] = 0.0;
    }
  }
  accumulate(plan, drv);
}

void accumulate(const DriverPlan& plan, Driver& drv) {
  const std::size_t n = plan.intervals();
  const std::size_t ti = plan.t_index();
  drv.w.resize(n + 1);
  drv.c1.resize(n + 1);
  drv.c2.resize(n + 1);
  drv.w[0] = drv.c1[0] = drv.c2[0] = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    drv.w[i + 1] = drv.w[i] + drv.dw[i];
    if (i + 1 == ti && drv.pinned_endpoint) drv.w[i + 1] = *drv.pinned_endpoint;
    const int d = plan.dim(i);
    const bool has1 = d >= 2;
    const bool has2 = d == 3;
    drv.c1[i + 1] = has1 ? drv.c1[i] + drv.d1[i] : kNaN;
    drv.c2[i + 1] = has2 ? drv.c2[i] + drv.d2[i] : kNaN;
  }
}

void condition_on_endpoint(const DriverPlan& plan, Driver& drv, double d) {
  if (plan.process() != Process::Wiener) {
    throw UnsupportedError("endpoint conditioning is provided for Wiener drivers only");
  }
  if (!std::isfinite(d)) throw DomainError("conditioning level must be finite");
  const std::size_t ti = plan.t_index();
  const double shift = (d - drv.w[ti]) / plan.T();
  for (std::size_t i = 0; i < ti; ++i) {
    drv.dw[i] += shift * plan.cov_with_endpoint(i, 0);
    if (plan.dim(i) == 2) drv.d1[i] += shift * plan.cov_with_endpoint(i, 1);
  }
  drv.pinned_endpoint = d;
  accumulate(plan, drv);
}

// ---------------------------------------------------------------------------

namespace {

void size_bundle(const DriverPlan& plan, Process process, PathBundle& out) {
  const std::size_t m = plan.grid().points.size();
  out.process = process;
  out.t = plan.grid().points;
  out.w.resize(m);
  out.w_ext.resize(m);
  out.aux.resize(m);
  out.process_path.resize(m);
  for (auto& v : out.bridge) v.resize(m);
  for (auto& v : out.deviation) v.resize(m);
}

}  // namespace

void build_wiener_bridges(const DriverPlan& plan, const Driver& drv, const ModelSpec& spec,
                          PathBundle& out) {
  if (plan.process() != Process::Wiener) throw DomainError("Wiener bridges need a Wiener plan");
  size_bundle(plan, Process::Wiener, out);
  const double T = plan.T(), a = spec.a, b = spec.b;
  const std::size_t n = out.t.size() - 1;
  const double wT = drv.w[plan.t_index()];
  for (std::size_t k = 0; k <= n; ++k) {
    const double t = out.t[k];
    const double w = drv.w[plan.grid_index()[k]];
    out.w[k] = w;
    out.process_path[k] = a + w;
    if (k == n) {
      out.w_ext[k] = kNaN;
      out.aux[k] = kNaN;
      for (int j = 0; j < 3; ++j) {
        out.bridge[j][k] = b;
        out.deviation[j][k] = wT - (b - a);
      }
      continue;
    }
    const double r = t / T;
    const double rem = (T - t) / T;
    const double m = drv.c1[plan.grid_index()[k]];
    const double w_st = drv.w[plan.st_index()[k]];
    out.w_ext[k] = w_st;
    out.aux[k] = m;
    const double mean = a + (b - a) * r;
    out.bridge[0][k] = mean + w - r * wT;
    out.bridge[1][k] = mean + (T - t) * m;
    out.bridge[2][k] = mean + rem * w_st;
    out.deviation[0][k] = r * (wT - (b - a));
    out.deviation[1][k] = (a - b) * r + w - (T - t) * m;
    out.deviation[2][k] = (a - b) * r + w - rem * w_st;
  }
}

void build_ou_paths(const DriverPlan& plan, const Driver& drv, const ModelSpec& spec,
                    PathBundle& out) {
  if (plan.process() != Process::OU) throw DomainError("OU paths need an OU plan");
  size_bundle(plan, Process::OU, out);
  const double sigma = plan.ou_params().sigma;
  const double q = plan.ou_params().q;
  const double T = plan.T(), a = spec.a, b = spec.b;
  const std::size_t n = out.t.size() - 1;
  const std::size_t ti = plan.t_index();
  const double eqT = std::exp(q * T);
  const double u0T = sigma * eqT * drv.c1[ti];
  const double shift = a * eqT - b;  // a e^{qT} - b
  for (std::size_t k = 0; k <= n; ++k) {
    const std::size_t gi = plan.grid_index()[k];
    out.w[k] = drv.w[gi];
    if (k == n) {
      out.w_ext[k] = kNaN;
      out.aux[k] = kNaN;
      out.process_path[k] = a * eqT + u0T;
      for (int j = 0; j < 3; ++j) {
        out.bridge[j][k] = b;
        out.deviation[j][k] = shift + u0T;
      }
      continue;
    }
    const auto& c = plan.ou_coeffs(k);
    const double u0 = sigma * c.eqt * drv.c1[gi];
    const double bsum = drv.c2[gi];
    const double w_st = drv.w[plan.st_index()[k]];
    out.w_ext[k] = w_st;
    out.aux[k] = bsum;
    out.process_path[k] = a * c.eqt + u0;
    const double mean = a * c.ra + b * c.rb;
    const double ir_noise = sigma * c.shr * bsum;
    const double st_noise = sigma * c.ra * w_st;
    out.bridge[0][k] = mean + u0 - c.rb * u0T;
    out.bridge[1][k] = mean + ir_noise;
    out.bridge[2][k] = mean + st_noise;
    out.deviation[0][k] = c.rb * (shift + u0T);
    out.deviation[1][k] = shift * c.rb + u0 - ir_noise;
    out.deviation[2][k] = shift * c.rb + u0 - st_noise;
  }
}

void build_paths(const DriverPlan& plan, const Driver& drv, const ModelSpec& spec,
                 PathBundle& out) {
  if (spec.process != plan.process()) throw DomainError("model and driver plan disagree");
  if (spec.process == Process::Wiener) {
    build_wiener_bridges(plan, drv, spec, out);
  } else {
    build_ou_paths(plan, drv, spec, out);
  }
}

void euler_bridge(const DriverPlan& plan, const Driver& drv, const ModelSpec& spec, int stride,
                  std::vector<double>& out) {
  const int n = plan.grid().n_steps();
  if (stride < 1 || n % stride != 0) throw DomainError("Euler stride must divide the step count");
  const int m = n / stride;
  const auto& pts = plan.grid().points;
  const auto& gi = plan.grid_index();
  const double T = plan.T(), b = spec.b;
  out.resize(m + 1);
  double x = spec.a;
  out[0] = x;
  const bool ou = spec.process == Process::OU;
  const double q = plan.ou_params().q, sigma = plan.ou_params().sigma;
  for (int j = 0; j + 1 < m; ++j) {
    const double t = pts[j * stride];
    const double h = pts[(j + 1) * stride] - t;
    const double dw = drv.w[gi[(j + 1) * stride]] - drv.w[gi[j * stride]];
    if (ou) {
      const double z = q * (T - t);
      x += q * (-x / std::tanh(z) + b / std::sinh(z)) * h + sigma * dw;
    } else {
      x += (b - x) / (T - t) * h + dw;
    }
    out[j + 1] = x;
  }
  out[m] = b;
}

// ---------------------------------------------------------------------------

Simulator::Simulator(const DriverPlan& plan, ModelSpec spec) : plan_(&plan), spec_(spec) {
  spec_.validate();
  if (spec_.process != plan.process()) throw DomainError("model and driver plan disagree");
}

const PathBundle& Simulator::run(rng::SeedSpec seed, std::optional<double> d) {
  generate(*plan_, seed, drv_);
  if (d) condition_on_endpoint(*plan_, drv_, *d);
  build_paths(*plan_, drv_, spec_, bundle_);
  return bundle_;
}

void write_paths_header(std::ostream& os, Process process, bool with_replicate) {
  const char* p = process == Process::Wiener ? "W" : "U";
  if (with_replicate) os << "replicate,";
  os << "t," << p << ',' << p << "_av," << p << "_ir," << p << "_st\n";
}

void write_paths_rows(std::ostream& os, const PathBundle& bundle, std::int64_t replicate) {
  for (std::size_t k = 0; k < bundle.t.size(); ++k) {
    if (replicate >= 0) os << replicate << ',';
    fmt(os, bundle.t[k]);
    os << ',';
    fmt(os, bundle.process_path[k]);
    for (int j = 0; j < 3; ++j) {
      os << ',';
      fmt(os, bundle.bridge[j][k]);
    }
    os << '\n';
  }
}

}  // namespace bridgelab::paths
