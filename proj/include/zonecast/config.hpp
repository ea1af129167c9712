#pragma once

#include <iosfwd>
#include <string>

#include "zonecast/backtest.hpp"
#include "zonecast/tune.hpp"

namespace zonecast::cli {

/// Everything the batch tool needs, read from one flat `section.key = value`
/// file. Unknown keys are rejected so typos fail loudly.
struct RunConfig {
  // Input paths.
  std::string power_csv;
  std::string met_csv;
  std::string totals_csv;
  std::string zones_csv;
  std::string forecast_met_dir;

  eval::BacktestConfig backtest;  // also carries the per-module parameters
  eval::TuneGrid tune;

  /// Synthetic-generator settings (consumed by the `synth` subcommand).
  struct SynthSettings {
    std::uint64_t seed = 42;
    std::string start = "2015-05-01";
    std::string end = "2016-11-15";
    int zone_count = 2;
    int provinces_per_zone = 3;
    double pv_capacity = 1000.0;
    double wd_capacity = 600.0;
    double pv_efficiency = 0.85;
    double noise_frac = 0.02;
    double forecast_noise_growth = 0.02;
    int forecast_horizon_hours = 240;
    std::string run_start;  // optional daily run-date range for forecast
    std::string run_end;    // files; defaults to the backtest test months
  } synth;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses `YYYY-MM-DD` into midnight UTC.
HourlyTimestamp parse_date(std::string_view text);

RunConfig parse_config(std::istream& in);
RunConfig load_config_file(const std::string& path);

}  // namespace zonecast::cli
