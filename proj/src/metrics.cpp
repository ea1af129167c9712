#include "zonecast/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace zonecast::eval {

namespace {

void check_inputs(std::span<const double> pred, std::span<const double> actual,
                  double m_norm) {
  if (pred.size() != actual.size())
    throw std::invalid_argument("metric: pred/actual length mismatch");
  if (pred.empty()) throw std::invalid_argument("metric: empty input");
  if (!(m_norm > 0.0)) throw std::invalid_argument("metric: m_norm must be > 0");
}

}  // namespace

double nmbe(std::span<const double> pred, std::span<const double> actual,
            double m_norm) {
  check_inputs(pred, actual, m_norm);
  KahanSum sum;
  for (std::size_t i = 0; i < pred.size(); ++i)
    sum.add((pred[i] - actual[i]) / m_norm);
  return sum.value() / double(pred.size());
}

double nrmse(std::span<const double> pred, std::span<const double> actual,
             double m_norm) {
  check_inputs(pred, actual, m_norm);
  KahanSum sum;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = (pred[i] - actual[i]) / m_norm;
    sum.add(e * e);
  }
  return std::sqrt(sum.value() / double(pred.size()));
}

double monthly_norm(const HourlySeries& measured, int month) {
  if (month < 1 || month > 12)
    throw std::invalid_argument("monthly_norm: month out of range");
  bool found = false;
  double best = 0.0;
  for (const HourlyPoint& p : measured.points) {
    if (p.missing || p.ts.month() != month) continue;
    if (!found || p.value > best) best = p.value;
    found = true;
  }
  if (!found)
    throw std::runtime_error("monthly_norm: no data for month " +
                             std::to_string(month));
  return best;
}

}  // namespace zonecast::eval
