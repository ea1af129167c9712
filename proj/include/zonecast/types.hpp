#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace zonecast {

/// Forecast horizon used throughout: 15 days of hourly values.
inline constexpr int kHorizonDays = 15;
inline constexpr int kHorizonHours = kHorizonDays * 24;

/// Number of Italian provinces the gridded weather data is aggregated to.
inline constexpr int kProvinceCount = 110;

/// The six Italian bidding zones.
enum class ZoneId : std::uint8_t { NORD, CNOR, CSUD, SUD, SICI, SARD };

inline constexpr std::array<ZoneId, 6> kAllZones = {
    ZoneId::NORD, ZoneId::CNOR, ZoneId::CSUD,
    ZoneId::SUD,  ZoneId::SICI, ZoneId::SARD};

const char* to_string(ZoneId zone);
std::optional<ZoneId> zone_from_string(std::string_view name);

/// Generation technology of an aggregated fleet.
enum class PlantKind : std::uint8_t { PV, WD };

const char* to_string(PlantKind kind);
std::optional<PlantKind> plant_kind_from_string(std::string_view name);

/// Calendar instant at hour resolution, UTC. Stamps are period-ending:
/// the value stamped H is the average over the hour (H-1, H].
class HourlyTimestamp {
 public:
  constexpr HourlyTimestamp() = default;

  static constexpr HourlyTimestamp from_epoch_hours(std::int64_t hours) {
    HourlyTimestamp t;
    t.hours_ = hours;
    return t;
  }
  static HourlyTimestamp from_ymdh(int year, int month, int day, int hour);

  /// Parses "YYYY-MM-DDTHH:00:00Z"; rejects nonzero minutes/seconds.
  static std::optional<HourlyTimestamp> parse(std::string_view iso);

  constexpr std::int64_t epoch_hours() const { return hours_; }

  int year() const;
  int month() const;  // 1..12
  int day() const;    // 1..31
  int hour() const;   // 0..23
  int day_of_year() const;  // 1..366

  HourlyTimestamp start_of_day() const;

  std::string to_string() const;

  friend constexpr auto operator<=>(HourlyTimestamp, HourlyTimestamp) = default;

  constexpr HourlyTimestamp operator+(std::int64_t hours) const {
    return from_epoch_hours(hours_ + hours);
  }
  constexpr HourlyTimestamp operator-(std::int64_t hours) const {
    return from_epoch_hours(hours_ - hours);
  }
  constexpr std::int64_t operator-(HourlyTimestamp other) const {
    return hours_ - other.hours_;
  }

 private:
  std::int64_t hours_ = 0;  // hours since 1970-01-01T00:00:00Z
};

int days_in_month(int year, int month);

/// One observation in an hourly stream. `missing` marks a gap explicitly;
/// the value of a missing point carries no meaning.
struct HourlyPoint {
  HourlyTimestamp ts;
  double value = 0.0;
  bool missing = false;
};

/// Ordered hourly stream for one (zone, quantity) or (province, variable).
/// Timestamps are strictly increasing; gaps may appear either as missing
/// flags or as absent stamps.
struct HourlySeries {
  std::vector<HourlyPoint> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }

  void sort_by_time();

  /// Binary search by timestamp; nullptr when absent.
  const HourlyPoint* find(HourlyTimestamp ts) const;

  /// Value at `ts`, or nullopt when absent or flagged missing.
  std::optional<double> value_at(HourlyTimestamp ts) const;
};

struct SeriesViolation {
  std::size_t index = 0;
  std::string reason;
};

/// Checks the HourlySeries invariants without throwing. Negative values are
/// only a breach for power series; pass require_nonnegative=false for
/// signed meteorological streams (UGRD/VGRD).
std::vector<SeriesViolation> validate_hourly_series(
    const HourlySeries& series, bool require_nonnegative = true);

/// Distance on a circular axis: min(|a-b| mod m, m - |a-b| mod m).
/// Works for 0-based hours and 1-based months alike (the difference is
/// shift-invariant). Throws std::invalid_argument when modulus < 2.
int circular_distance(int a, int b, int modulus);

/// Aligned (timestamp, predictor vector, target) rows for one zone and
/// plant kind. Missing data is resolved upstream; every cell is present.
struct SampleMatrix {
  ZoneId zone = ZoneId::NORD;
  PlantKind kind = PlantKind::PV;
  std::vector<std::string> feature_names;
  std::vector<HourlyTimestamp> timestamps;
  std::vector<double> features;  // row-major, rows() x width()
  std::vector<double> targets;   // MW

  std::size_t width() const { return feature_names.size(); }
  std::size_t rows() const { return targets.size(); }

  std::span<const double> row(std::size_t i) const {
    return {features.data() + i * width(), width()};
  }

  void push_row(HourlyTimestamp ts, std::span<const double> x, double target);
};

/// One forecasting run: 360 hourly values from the run date, with a flag
/// per lead hour telling whether its met inputs were persistence-filled.
struct ForecastRun {
  HourlyTimestamp run_date;  // 00:00 of the run day
  ZoneId zone = ZoneId::NORD;
  PlantKind kind = PlantKind::PV;
  std::vector<double> values;                 // size kHorizonHours, MW
  std::vector<std::uint8_t> persistence_flag;  // size kHorizonHours

  /// Timestamp of lead hour h (1-based, period-ending).
  HourlyTimestamp time_of(int lead_hour) const { return run_date + lead_hour; }
};

}  // namespace zonecast
