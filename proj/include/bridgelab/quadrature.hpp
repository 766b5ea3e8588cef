#pragma once

// Globally adaptive 7/15-point Gauss-Kronrod quadrature.
//
// The interval with the largest local error estimate is bisected until the
// summed estimate meets max(abs_tol, rel_tol * |I|). Integrable endpoint
// behaviour of x*log(x) type is resolved by repeated bisection toward the
// endpoint; no extrapolation is attempted.

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <sstream>
#include <vector>

#include "bridgelab/common.hpp"

namespace bridgelab::quad {

struct Options {
  double abs_tol = 1e-12;
  double rel_tol = 1e-12;
  int max_intervals = 4000;
};

struct Result {
  double value = 0.0;
  double abs_error = 0.0;
  int intervals = 0;
  int evaluations = 0;
};

namespace detail {

inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights for the nodes kKronrodNodes[1], [3], [5], [7].
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double lo, hi, value, error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

template <class F>
Panel gk15(F& f, double lo, double hi) {
  const double center = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  const double fc = f(center);
  double kronrod = fc * kKronrodWeights[7];
  double gauss = fc * kGaussWeights[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kKronrodNodes[j];
    const double pair = f(center - dx) + f(center + dx);
    kronrod += kKronrodWeights[j] * pair;
    if (j % 2 == 1) gauss += kGaussWeights[j / 2] * pair;
  }
  return {lo, hi, kronrod * half, std::abs((kronrod - gauss) * half)};
}

}  // namespace detail

/// Integrates f over [lo, hi] (lo < hi). Throws NumericalError when the
/// tolerance is not met within opt.max_intervals panels.
template <class F>
Result integrate(F&& f, double lo, double hi, const Options& opt = {}) {
  if (!(lo < hi)) {
    if (lo == hi) return {};
    throw DomainError("quad::integrate requires lo <= hi");
  }
  std::priority_queue<detail::Panel> heap;
  heap.push(detail::gk15(f, lo, hi));
  Result r;
  r.evaluations = 15;
  double total = heap.top().value;
  double err = heap.top().error;
  while (err > std::max(opt.abs_tol, opt.rel_tol * std::abs(total))) {
    if (static_cast<int>(heap.size()) >= opt.max_intervals) {
      std::ostringstream msg;
      msg.precision(3);
      msg << "adaptive quadrature on [" << lo << ", " << hi
          << "] did not converge: estimate " << total << ", error " << err
          << " after " << heap.size() << " panels";
      throw NumericalError(msg.str());
    }
    const detail::Panel worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.lo + worst.hi);
    const detail::Panel left = detail::gk15(f, worst.lo, mid);
    const detail::Panel right = detail::gk15(f, mid, worst.hi);
    r.evaluations += 30;
    total += left.value + right.value - worst.value;
    err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }
  // Re-sum from scratch so the running updates do not leak rounding error.
  std::vector<double> values;
  values.reserve(heap.size());
  double err_sum = 0.0;
  while (!heap.empty()) {
    values.push_back(heap.top().value);
    err_sum += heap.top().error;
    heap.pop();
  }
  std::sort(values.begin(), values.end(),
            [](double x, double y) { return std::abs(x) < std::abs(y); });
  double sum = 0.0;
  for (double v : values) sum += v;
  r.value = sum;
  r.abs_error = err_sum;
  r.intervals = static_cast<int>(values.size());
  return r;
}

}  // namespace bridgelab::quad
