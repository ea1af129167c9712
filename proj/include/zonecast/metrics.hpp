#pragma once

#include <span>

#include "zonecast/types.hpp"

namespace zonecast::eval {

/// Kahan-compensated accumulator so parallel and serial reductions of the
/// same operand sequence agree to ~1e-12.
class KahanSum {
 public:
  void add(double x) {
    const double y = x - compensation_;
    const double t = sum_ + y;
    compensation_ = (t - sum_) - y;
    sum_ = t;
  }
  double value() const { return sum_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

/// Normalized mean bias error: (1/N) sum (pred_i - actual_i) / m_norm.
/// Positive means overestimation.
double nmbe(std::span<const double> pred, std::span<const double> actual,
            double m_norm);

/// Normalized root mean squared error:
/// sqrt((1/N) sum ((pred_i - actual_i) / m_norm)^2). Always >= |nmbe|.
double nrmse(std::span<const double> pred, std::span<const double> actual,
             double m_norm);

/// Historical maximum measured power over every occurrence of the given
/// calendar month in the series. Throws when the month never appears.
double monthly_norm(const HourlySeries& measured, int month);

}  // namespace zonecast::eval
