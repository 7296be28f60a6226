#pragma once

#include <algorithm>
#include <cmath>

namespace oscincl {

/// Interval hull [min ∂f(s), max ∂f(s)] of a scalar Clarke generalized gradient.
struct GradInterval {
  double lo = 0.0;
  double hi = 0.0;

  static constexpr GradInterval point(double v) { return {v, v}; }

  /// Hull of {0} and this interval.
  constexpr GradInterval with_zero() const { return {std::min(lo, 0.0), std::max(hi, 0.0)}; }
  constexpr GradInterval hull(const GradInterval& o) const {
    return {std::min(lo, o.lo), std::max(hi, o.hi)};
  }
  constexpr bool contains(double v) const { return lo <= v && v <= hi; }
  constexpr bool degenerate() const { return lo == hi; }
  constexpr double width() const { return hi - lo; }
  constexpr double midpoint() const { return 0.5 * (lo + hi); }

  /// Distance from v to the interval; zero inside.
  constexpr double distance(double v) const {
    if (v < lo) return lo - v;
    if (v > hi) return v - hi;
    return 0.0;
  }

  friend constexpr GradInterval operator+(const GradInterval& a, const GradInterval& b) {
    return {a.lo + b.lo, a.hi + b.hi};
  }
  friend constexpr GradInterval operator+(const GradInterval& a, double c) {
    return {a.lo + c, a.hi + c};
  }
  friend constexpr GradInterval operator*(double c, const GradInterval& a) {
    return c >= 0.0 ? GradInterval{c * a.lo, c * a.hi} : GradInterval{c * a.hi, c * a.lo};
  }
  friend constexpr bool operator==(const GradInterval&, const GradInterval&) = default;
};

}  // namespace oscincl
