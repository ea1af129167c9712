#pragma once

#include <map>
#include <vector>

#include "zonecast/ingest.hpp"
#include "zonecast/types.hpp"

namespace zonecast::preprocess {

struct PreprocessConfig {
  double cone_threshold = 5.0;    // MAD multiples around the median ratio
  double ghi_floor = 20.0;        // W/m2; below this an hour counts as night
  int max_gap_hours = 6;
  double mad_fallback_frac = 0.1;  // bound fraction of the median when MAD=0
};

/// Scales every hourly value of month m (all zones) by E_m / S_m so that
/// the zonal sum reproduces the national monthly energy. Hourly MW values
/// are read as MWh per hour. Missing points are untouched.
std::map<ZoneId, HourlySeries> monthly_rescale(
    const std::map<ZoneId, HourlySeries>& zonal,
    const std::vector<ingest::MonthlyNationalTotal>& totals, PlantKind kind);

struct ConeMask {
  std::vector<bool> outlier;   // true = drop this pair
  bool no_statistics = false;  // all pairs below the GHI floor
};

/// Robust safety cone in the (mean-GHI, power) plane: a median/MAD band on
/// the power-to-irradiance ratio. Night hours (ghi below the floor) are
/// never flagged.
ConeMask cone_filter(const std::vector<std::pair<double, double>>& pairs,
                     const PreprocessConfig& cfg);

/// Fills missing runs of length <= max_gap_hours with a natural cubic
/// spline through the non-missing points. Longer runs and runs touching
/// the series ends stay missing. Present points are returned unchanged.
HourlySeries spline_fill(const HourlySeries& series, int max_gap_hours,
                         bool clip_at_zero = true);

}  // namespace zonecast::preprocess
