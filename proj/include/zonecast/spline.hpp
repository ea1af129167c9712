#pragma once

#include <cstddef>
#include <vector>

namespace zonecast {

/// Natural cubic spline through (x, y) knots: zero second derivative at
/// both ends. Knots must be strictly increasing; at least 2 required
/// (2 or 3 knots degrade to the interpolating line/parabola family with
/// natural ends).
class CubicSpline {
 public:
  CubicSpline(std::vector<double> x, std::vector<double> y);

  double operator()(double x) const;

  /// Second derivative of the interpolant (linear between knots).
  double second_derivative(double x) const;

  std::size_t knot_count() const { return x_.size(); }

 private:
  std::size_t segment_of(double x) const;

  std::vector<double> x_, y_;
  std::vector<double> m_;  // second derivatives at knots
};

}  // namespace zonecast
