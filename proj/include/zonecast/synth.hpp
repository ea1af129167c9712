#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "zonecast/ingest.hpp"
#include "zonecast/types.hpp"

namespace zonecast::synth {

struct ZoneSpec {
  ZoneId zone = ZoneId::NORD;
  std::vector<int> provinces;  // disjoint across zones, 1..110
  double pv_capacity_mw = 1000.0;
  double wd_capacity_mw = 600.0;
};

/// Deterministic generator settings. The truth mappings are closed-form
/// and monotone in the model predictors, so learned forecasts can be held
/// to meaningful accuracy bounds.
struct SynthConfig {
  std::uint64_t rng_seed = 42;
  HourlyTimestamp start_day;  // stamps run from start 00:00Z
  HourlyTimestamp end_day;    // ... through end 23:00Z inclusive
  std::vector<ZoneSpec> zones;

  double pv_efficiency = 0.85;
  double clearness_persistence = 0.95;  // AR(1) coefficient of cloudiness

  double wd_ar_coeff = 0.97;  // AR(1) coefficient of wind components
  double wd_mean_speed = 7.0;
  double wd_speed_sigma = 3.0;
  double cut_in = 3.0;
  double rated = 12.0;
  double cut_out = 25.0;

  double noise_frac = 0.0;             // multiplicative noise on power
  double forecast_noise_growth = 0.0;  // relative met noise per lead day
  int forecast_horizon_hours = 240;    // available NWP horizon, whole days
  std::vector<HourlyTimestamp> run_dates;  // forecast files to produce

  void validate() const;
};

struct SynthDataset {
  ingest::PowerSeriesMap power;
  ingest::MetSeriesMap met;  // measured truth
  std::vector<ingest::MonthlyNationalTotal> totals;
  std::map<ZoneId, std::vector<int>> zone_provinces;
  /// Forecast met per run date (epoch hours of 00:00), lead hours 1..H.
  std::map<std::int64_t, ingest::MetSeriesMap> forecasts;
};

/// Closed-form truth pieces, exposed so tests can recompute power from the
/// emitted met files.
double clear_sky_ghi(HourlyTimestamp ts, int province);
double wind_power_fraction(double speed, const SynthConfig& cfg);

SynthDataset generate_pv_dataset(const SynthConfig& cfg);
SynthDataset generate_wd_dataset(const SynthConfig& cfg);

/// Both kinds over the same provinces and dates.
SynthDataset generate_dataset(const SynthConfig& cfg);

/// Writes power.csv, met.csv, totals.csv, zones.csv and one
/// forecast_met_YYYY-MM-DD.csv per run date into `dir`.
void write_dataset(const SynthDataset& data, const std::string& dir);

}  // namespace zonecast::synth
