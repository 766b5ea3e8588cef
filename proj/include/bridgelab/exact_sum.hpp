#pragma once

// Order-independent floating-point accumulation.
//
// ExactSum keeps a non-overlapping expansion of the running total
// (Shewchuk's grow-expansion, as in Python's math.fsum), so value() is the
// correctly rounded sum of everything added. Merging two accumulators in any
// order therefore produces bit-identical results, which is what lets the
// OpenMP reducer agree exactly with the serial reference.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace bridgelab {

class ExactSum {
 public:
  void add(double x) {
    if (!std::isfinite(x)) {
      special_ += x;
      return;
    }
    std::size_t i = 0;
    for (double y : partials_) {
      if (std::abs(x) < std::abs(y)) std::swap(x, y);
      const double hi = x + y;
      const double lo = y - (hi - x);
      if (lo != 0.0) partials_[i++] = lo;
      x = hi;
    }
    partials_.resize(i);
    partials_.push_back(x);
  }

  void merge(const ExactSum& other) {
    for (double p : other.partials_) add(p);
    special_ += other.special_;
  }

  double value() const {
    if (special_ != 0.0 || std::isnan(special_)) return special_;
    if (partials_.empty()) return 0.0;
    std::size_t n = partials_.size();
    double hi = partials_[--n];
    double lo = 0.0;
    while (n > 0) {
      const double x = hi;
      const double y = partials_[--n];
      hi = x + y;
      lo = y - (hi - x);
      if (lo != 0.0) break;
    }
    // Round-half-even correction when the remaining partials push the
    // discarded low part exactly onto a tie.
    if (n > 0 && ((lo < 0.0 && partials_[n - 1] < 0.0) ||
                  (lo > 0.0 && partials_[n - 1] > 0.0))) {
      const double y = lo * 2.0;
      const double x = hi + y;
      if (y == x - hi) hi = x;
    }
    return hi;
  }

 private:
  std::vector<double> partials_;
  double special_ = 0.0;
};

/// Count, exact sums of a fixed set of per-replicate quantities, and the
/// largest magnitude seen. Merge is associative and commutative.
class SumSet {
 public:
  SumSet() = default;
  explicit SumSet(std::size_t width) : sums_(width), max_abs_(width, 0.0) {}

  std::size_t width() const { return sums_.size(); }
  std::int64_t count() const { return count_; }

  /// Adds one replicate's values; `values.size()` must equal width().
  template <class Range>
  void add_row(const Range& values) {
    std::size_t i = 0;
    for (double v : values) {
      sums_[i].add(v);
      max_abs_[i] = std::max(max_abs_[i], std::abs(v));
      ++i;
    }
    ++count_;
  }

  void merge(const SumSet& other) {
    if (sums_.empty()) {
      *this = other;
      return;
    }
    for (std::size_t i = 0; i < sums_.size(); ++i) {
      sums_[i].merge(other.sums_[i]);
      max_abs_[i] = std::max(max_abs_[i], other.max_abs_[i]);
    }
    count_ += other.count_;
  }

  double sum(std::size_t i) const { return sums_[i].value(); }
  double mean(std::size_t i) const {
    return count_ ? sum(i) / static_cast<double>(count_) : std::numeric_limits<double>::quiet_NaN();
  }
  double max_abs(std::size_t i) const { return max_abs_[i]; }

 private:
  std::vector<ExactSum> sums_;
  std::vector<double> max_abs_;
  std::int64_t count_ = 0;
};

}  // namespace bridgelab
