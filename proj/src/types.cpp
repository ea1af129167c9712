#include "zonecast/types.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <stdexcept>

namespace zonecast {

namespace {

std::chrono::year_month_day civil_of(std::int64_t epoch_hours) {
  using namespace std::chrono;
  const std::int64_t d =
      epoch_hours >= 0 ? epoch_hours / 24 : (epoch_hours - 23) / 24;
  return year_month_day{sys_days{days{d}}};
}

}  // namespace

const char* to_string(ZoneId zone) {
  switch (zone) {
    case ZoneId::NORD: return "NORD";
    case ZoneId::CNOR: return "CNOR";
    case ZoneId::CSUD: return "CSUD";
    case ZoneId::SUD:  return "SUD";
    case ZoneId::SICI: return "SICI";
    case ZoneId::SARD: return "SARD";
  }
  return "?";
}

std::optional<ZoneId> zone_from_string(std::string_view name) {
  for (ZoneId z : kAllZones) {
    if (name == to_string(z)) return z;
  }
  return std::nullopt;
}

const char* to_string(PlantKind kind) {
  return kind == PlantKind::PV ? "PV" : "WD";
}

std::optional<PlantKind> plant_kind_from_string(std::string_view name) {
  if (name == "PV") return PlantKind::PV;
  if (name == "WD") return PlantKind::WD;
  return std::nullopt;
}

HourlyTimestamp HourlyTimestamp::from_ymdh(int year, int month, int day,
                                           int hour) {
  using namespace std::chrono;
  const year_month_day ymd{std::chrono::year{year}, std::chrono::month{unsigned(month)},
                           std::chrono::day{unsigned(day)}};
  if (!ymd.ok()) throw std::invalid_argument("invalid calendar date");
  if (hour < 0 || hour > 23) throw std::invalid_argument("hour out of range");
  const sys_days sd{ymd};
  return from_epoch_hours(sd.time_since_epoch().count() * 24 + hour);
}

std::optional<HourlyTimestamp> HourlyTimestamp::parse(std::string_view iso) {
  // YYYY-MM-DDTHH:00:00Z (exactly 20 chars)
  if (iso.size() != 20) return std::nullopt;
  if (iso[4] != '-' || iso[7] != '-' || iso[10] != 'T' || iso[13] != ':' ||
      iso[16] != ':' || iso[19] != 'Z')
    return std::nullopt;
  if (iso.substr(14, 2) != "00" || iso.substr(17, 2) != "00")
    return std::nullopt;
  auto num = [&](std::size_t pos, std::size_t len, int& out) {
    const char* first = iso.data() + pos;
    auto [ptr, ec] = std::from_chars(first, first + len, out);
    return ec == std::errc{} && ptr == first + len;
  };
  int y = 0, m = 0, d = 0, h = 0;
  if (!num(0, 4, y) || !num(5, 2, m) || !num(8, 2, d) || !num(11, 2, h))
    return std::nullopt;
  using namespace std::chrono;
  const year_month_day ymd{std::chrono::year{y}, std::chrono::month{unsigned(m)},
                           std::chrono::day{unsigned(d)}};
  if (!ymd.ok() || h < 0 || h > 23) return std::nullopt;
  return from_ymdh(y, m, d, h);
}

int HourlyTimestamp::year() const { return int(civil_of(hours_).year()); }

int HourlyTimestamp::month() const {
  return int(unsigned(civil_of(hours_).month()));
}

int HourlyTimestamp::day() const {
  return int(unsigned(civil_of(hours_).day()));
}

int HourlyTimestamp::hour() const {
  const std::int64_t h = ((hours_ % 24) + 24) % 24;
  return int(h);
}

int HourlyTimestamp::day_of_year() const {
  using namespace std::chrono;
  const year_month_day ymd = civil_of(hours_);
  const sys_days jan1{ymd.year() / January / 1};
  const sys_days today{ymd};
  return int((today - jan1).count()) + 1;
}

HourlyTimestamp HourlyTimestamp::start_of_day() const {
  return from_epoch_hours(hours_ - hour());
}

std::string HourlyTimestamp::to_string() const {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:00:00Z", year(), month(),
                day(), hour());
  return buf;
}

int days_in_month(int year, int month) {
  using namespace std::chrono;
  const year_month_day_last last{std::chrono::year{year},
                                 month_day_last{std::chrono::month{unsigned(month)}}};
  return int(unsigned(last.day()));
}

void HourlySeries::sort_by_time() {
  std::sort(points.begin(), points.end(),
            [](const HourlyPoint& a, const HourlyPoint& b) { return a.ts < b.ts; });
}

const HourlyPoint* HourlySeries::find(HourlyTimestamp ts) const {
  auto it = std::lower_bound(
      points.begin(), points.end(), ts,
      [](const HourlyPoint& p, HourlyTimestamp t) { return p.ts < t; });
  if (it == points.end() || it->ts != ts) return nullptr;
  return &*it;
}

std::optional<double> HourlySeries::value_at(HourlyTimestamp ts) const {
  const HourlyPoint* p = find(ts);
  if (p == nullptr || p->missing) return std::nullopt;
  return p->value;
}

std::vector<SeriesViolation> validate_hourly_series(const HourlySeries& series,
                                                    bool require_nonnegative) {
  std::vector<SeriesViolation> out;
  for (std::size_t i = 0; i < series.points.size(); ++i) {
    const HourlyPoint& p = series.points[i];
    if (i > 0 && p.ts <= series.points[i - 1].ts) {
      out.push_back({i, p.ts == series.points[i - 1].ts
                            ? "duplicated timestamp " + p.ts.to_string()
                            : "timestamps not strictly increasing at " +
                                  p.ts.to_string()});
    }
    if (require_nonnegative && !p.missing && p.value < 0.0) {
      out.push_back({i, "negative value " + std::to_string(p.value) + " at " +
                            p.ts.to_string()});
    }
  }
  return out;
}

int circular_distance(int a, int b, int modulus) {
  if (modulus < 2) throw std::invalid_argument("circular_distance: modulus < 2");
  int d = (a - b) % modulus;
  if (d < 0) d += modulus;
  return std::min(d, modulus - d);
}

void SampleMatrix::push_row(HourlyTimestamp ts, std::span<const double> x,
                            double target) {
  if (x.size() != width())
    throw std::invalid_argument("SampleMatrix: row width mismatch");
  timestamps.push_back(ts);
  features.insert(features.end(), x.begin(), x.end());
  targets.push_back(target);
}

}  // namespace zonecast
