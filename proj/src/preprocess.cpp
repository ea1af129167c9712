#include "zonecast/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "zonecast/spline.hpp"

namespace zonecast::preprocess {

namespace {

double median_of_sorted(const std::vector<double>& v) {
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return median_of_sorted(v);
}

}  // namespace

std::map<ZoneId, HourlySeries> monthly_rescale(
    const std::map<ZoneId, HourlySeries>& zonal,
    const std::vector<ingest::MonthlyNationalTotal>& totals, PlantKind kind) {
  // National energy per (year, month) for this kind.
  std::map<std::pair<int, int>, double> energy;
  for (const auto& t : totals) {
    if (t.kind == kind) energy[{t.year, t.month}] = t.energy_mwh;
  }

  // Zonal sum per (year, month); zones ascending, hours ascending, so the
  // accumulation order matches how totals files are produced.
  std::map<std::pair<int, int>, double> sums;
  for (const auto& [zone, series] : zonal) {
    for (const HourlyPoint& p : series.points) {
      auto& s = sums[{p.ts.year(), p.ts.month()}];
      if (!p.missing) s += p.value;
    }
  }

  std::map<std::pair<int, int>, double> factor;
  for (const auto& [ym, sum] : sums) {
    const auto it = energy.find(ym);
    if (it == energy.end())
      throw std::runtime_error("monthly_rescale: no national total for " +
                               std::to_string(ym.first) + "-" +
                               std::to_string(ym.second));
    if (sum == 0.0) {
      if (it->second > 0.0)
        throw std::runtime_error(
            "monthly_rescale: zonal sum is zero but national total is " +
            std::to_string(it->second) + " for " + std::to_string(ym.first) +
            "-" + std::to_string(ym.second));
      factor[ym] = 1.0;  // vacuous month
    } else {
      factor[ym] = it->second / sum;
    }
  }

  std::map<ZoneId, HourlySeries> out = zonal;
  for (auto& [zone, series] : out) {
    for (HourlyPoint& p : series.points) {
      if (p.missing) continue;
      p.value *= factor[{p.ts.year(), p.ts.month()}];
    }
  }
  return out;
}

ConeMask cone_filter(const std::vector<std::pair<double, double>>& pairs,
                     const PreprocessConfig& cfg) {
  if (pairs.empty()) throw std::invalid_argument("cone_filter: no pairs");

  ConeMask result;
  result.outlier.assign(pairs.size(), false);

  std::vector<std::size_t> day_idx;
  std::vector<double> ratios;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& [ghi, power] = pairs[i];
    if (ghi < cfg.ghi_floor) continue;  // night exemption
    day_idx.push_back(i);
    ratios.push_back(power / ghi);
  }
  if (day_idx.empty()) {
    result.no_statistics = true;
    return result;
  }

  const double med = median(ratios);
  std::vector<double> deviations(ratios.size());
  for (std::size_t i = 0; i < ratios.size(); ++i)
    deviations[i] = std::abs(ratios[i] - med);
  const double mad = median(deviations);
  const double bound =
      mad > 0.0 ? cfg.cone_threshold * mad
                : cfg.cone_threshold * cfg.mad_fallback_frac * med;

  for (std::size_t i = 0; i < ratios.size(); ++i) {
    if (std::abs(ratios[i] - med) > bound) result.outlier[day_idx[i]] = true;
  }
  return result;
}

HourlySeries spline_fill(const HourlySeries& series, int max_gap_hours,
                         bool clip_at_zero) {
  if (max_gap_hours < 1)
    throw std::invalid_argument("spline_fill: max_gap_hours < 1");

  bool any_missing = false;
  std::vector<double> knot_x, knot_y;
  for (const HourlyPoint& p : series.points) {
    if (p.missing) {
      any_missing = true;
    } else {
      knot_x.push_back(double(p.ts.epoch_hours()));
      knot_y.push_back(p.value);
    }
  }
  if (!any_missing) return series;
  if (knot_x.size() < 4)
    throw std::runtime_error(
        "spline_fill: fewer than 4 non-missing points with gaps present");

  const CubicSpline spline(std::move(knot_x), std::move(knot_y));

  HourlySeries out = series;
  const std::size_t n = out.points.size();
  std::size_t i = 0;
  while (i < n) {
    if (!out.points[i].missing) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < n && out.points[j].missing) ++j;
    // Run [i, j); interior only — spline values outside the knot range
    // would be extrapolation, not interpolation.
    const bool interior = i > 0 && j < n;
    const std::int64_t gap_hours =
        interior ? out.points[j].ts - out.points[i - 1].ts - 1
                 : std::int64_t(j - i);
    if (interior && gap_hours <= max_gap_hours) {
      for (std::size_t k = i; k < j; ++k) {
        double v = spline(double(out.points[k].ts.epoch_hours()));
        if (clip_at_zero && v < 0.0) v = 0.0;
        out.points[k].value = v;
        out.points[k].missing = false;
      }
    }
    i = j;
  }
  return out;
}

}  // namespace zonecast::preprocess
