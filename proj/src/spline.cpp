#include "zonecast/spline.hpp"

#include <algorithm>
#include <stdexcept>

namespace zonecast {

CubicSpline::CubicSpline(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
  const std::size_t n = x_.size();
  if (n < 2 || y_.size() != n)
    throw std::invalid_argument("CubicSpline: need >= 2 knots, equal sizes");
  for (std::size_t i = 1; i < n; ++i) {
    if (!(x_[i] > x_[i - 1]))
      throw std::invalid_argument("CubicSpline: knots not strictly increasing");
  }

  m_.assign(n, 0.0);
  if (n == 2) return;

  // Tridiagonal system for interior second derivatives, natural ends.
  const std::size_t interior = n - 2;
  std::vector<double> diag(interior), rhs(interior), sub(interior), sup(interior);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = x_[i] - x_[i - 1];
    const double h1 = x_[i + 1] - x_[i];
    sub[i - 1] = h0;
    diag[i - 1] = 2.0 * (h0 + h1);
    sup[i - 1] = h1;
    rhs[i - 1] =
        6.0 * ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
  }
  // Thomas algorithm.
  for (std::size_t i = 1; i < interior; ++i) {
    const double w = sub[i] / diag[i - 1];
    diag[i] -= w * sup[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  m_[interior] = rhs[interior - 1] / diag[interior - 1];
  for (std::size_t i = interior - 1; i >= 1; --i) {
    m_[i] = (rhs[i - 1] - sup[i - 1] * m_[i + 1]) / diag[i - 1];
  }
}

std::size_t CubicSpline::segment_of(double x) const {
  // Segment i covers [x_i, x_{i+1}]; clamp outside the knot range.
  auto it = std::upper_bound(x_.begin(), x_.end(), x);
  std::size_t i = it == x_.begin() ? 0 : std::size_t(it - x_.begin()) - 1;
  if (i + 1 >= x_.size()) i = x_.size() - 2;
  return i;
}

double CubicSpline::operator()(double x) const {
  const std::size_t i = segment_of(x);
  const double h = x_[i + 1] - x_[i];
  const double a = (x_[i + 1] - x) / h;
  const double b = (x - x_[i]) / h;
  return a * y_[i] + b * y_[i + 1] +
         ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / 6.0;
}

double CubicSpline::second_derivative(double x) const {
  const std::size_t i = segment_of(x);
  const double h = x_[i + 1] - x_[i];
  return m_[i] * (x_[i + 1] - x) / h + m_[i + 1] * (x - x_[i]) / h;
}

}  // namespace zonecast
