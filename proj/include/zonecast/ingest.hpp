#pragma once

#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "zonecast/types.hpp"

namespace zonecast::ingest {

/// Meteorological variables delivered at province level.
enum class MetVariable : std::uint8_t { GHI, GHI_CS, UGRD, VGRD };

inline constexpr std::array<MetVariable, 4> kAllMetVariables = {
    MetVariable::GHI, MetVariable::GHI_CS, MetVariable::UGRD,
    MetVariable::VGRD};

const char* to_string(MetVariable v);
std::optional<MetVariable> met_variable_from_string(std::string_view name);

/// Wind components may be negative; irradiance may not.
bool is_signed_variable(MetVariable v);

/// The two variables a plant kind consumes: GHI/GHI_CS or UGRD/VGRD.
std::vector<MetVariable> variables_for(PlantKind kind);

using PowerKey = std::pair<ZoneId, PlantKind>;
using MetKey = std::pair<int, MetVariable>;  // (province id 1..110, variable)
using PowerSeriesMap = std::map<PowerKey, HourlySeries>;
using MetSeriesMap = std::map<MetKey, HourlySeries>;

struct RowError {
  std::size_t line = 0;  // 1-based, header is line 1
  std::string message;
};

/// Thrown when a file cannot be interpreted at all (bad header, missing
/// file). Per-row problems are collected as RowError instead.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename T>
struct ParseResult {
  T value;
  std::vector<RowError> row_errors;
};

/// Power CSV: header `timestamp,zone,kind,power_mw`; empty power = missing.
ParseResult<PowerSeriesMap> parse_power_csv(std::istream& in);

/// Met CSV: header `timestamp,province_id,variable,value`.
ParseResult<MetSeriesMap> parse_met_csv(std::istream& in);

void write_power_csv(const PowerSeriesMap& series, std::ostream& out);
void write_met_csv(const MetSeriesMap& series, std::ostream& out);

/// National monthly generation, used for proportional rescaling.
struct MonthlyNationalTotal {
  int year = 0;
  int month = 0;  // 1..12
  PlantKind kind = PlantKind::PV;
  double energy_mwh = 0.0;
};

/// Monthly totals CSV: header `year,month,kind,energy_mwh`.
ParseResult<std::vector<MonthlyNationalTotal>> parse_totals_csv(std::istream& in);
void write_totals_csv(const std::vector<MonthlyNationalTotal>& totals,
                      std::ostream& out);

/// Zone membership CSV: header `zone,province_id`.
ParseResult<std::map<ZoneId, std::vector<int>>> parse_zones_csv(std::istream& in);

/// One raster snapshot of one variable.
struct GridField {
  struct Point {
    double lat = 0.0;
    double lon = 0.0;
    double value = 0.0;
  };
  std::vector<Point> points;
  HourlyTimestamp timestamp;
  MetVariable variable = MetVariable::GHI;
};

/// Precomputed assignment of grid points to provinces.
struct ProvinceMask {
  struct Entry {
    double lat = 0.0;
    double lon = 0.0;
    int province = 0;
  };
  std::vector<Entry> entries;
};

/// Grid CSV: header `lat,lon,value`. Timestamp/variable are supplied by the
/// caller (one raster file holds a single snapshot).
ParseResult<GridField> parse_grid_csv(std::istream& in, HourlyTimestamp ts,
                                      MetVariable variable);

/// Mask CSV: header `lat,lon,province_id`.
ParseResult<ProvinceMask> parse_mask_csv(std::istream& in);

struct ProvinceAggregate {
  std::map<int, double> mean_by_province;
  std::size_t unmatched_points = 0;  // grid points absent from the mask
};

/// Unweighted mean of grid values per province. Points not covered by the
/// mask are dropped and counted.
ProvinceAggregate aggregate_grid_to_provinces(const GridField& field,
                                              const ProvinceMask& mask);

/// Feature source: one column per (province, variable) pair, in order.
using FeatureSpecEntry = std::pair<int, MetVariable>;

/// Inner-joins power against every referenced met series on timestamps
/// where all values are present and non-missing.
SampleMatrix join_samples(const HourlySeries& power, const MetSeriesMap& met,
                          const std::vector<FeatureSpecEntry>& feature_spec,
                          ZoneId zone, PlantKind kind);

/// ForecastRun CSV: header
/// `run_date,zone,kind,lead_hour,timestamp,power_mw,persistence_flag`.
void write_forecast_csv(const ForecastRun& run, std::ostream& out);

}  // namespace zonecast::ingest
