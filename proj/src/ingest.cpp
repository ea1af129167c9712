#include "zonecast/ingest.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "zonecast/io_util.hpp"

namespace zonecast::ingest {

namespace {

// Reads the header line and checks it verbatim (modulo field trimming).
void expect_header(std::istream& in, std::string_view expected,
                   std::string_view what) {
  std::string line;
  if (!std::getline(in, line))
    throw FormatError(std::string(what) + ": empty input, expected header '" +
                      std::string(expected) + "'");
  if (trim(line) != expected)
    throw FormatError(std::string(what) + ": bad header '" + line +
                      "', expected '" + std::string(expected) + "'");
}

bool blank(std::string_view line) { return trim(line).empty(); }

// Sorts each collected series and demotes duplicate timestamps to row errors.
template <typename Map>
void finalize_series(Map& map, std::vector<RowError>& errors) {
  for (auto& [key, entry] : map) {
    auto& [series, lines] = entry;
    std::vector<std::size_t> order(series.points.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return series.points[a].ts < series.points[b].ts;
    });
    HourlySeries sorted;
    sorted.points.reserve(series.points.size());
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      const std::size_t i = order[pos];
      if (!sorted.points.empty() && sorted.points.back().ts == series.points[i].ts) {
        errors.push_back({lines[i], "duplicate timestamp " +
                                        series.points[i].ts.to_string()});
        continue;
      }
      sorted.points.push_back(series.points[i]);
    }
    series = std::move(sorted);
  }
}

}  // namespace

const char* to_string(MetVariable v) {
  switch (v) {
    case MetVariable::GHI:    return "GHI";
    case MetVariable::GHI_CS: return "GHI_CS";
    case MetVariable::UGRD:   return "UGRD";
    case MetVariable::VGRD:   return "VGRD";
  }
  return "?";
}

std::optional<MetVariable> met_variable_from_string(std::string_view name) {
  for (MetVariable v : kAllMetVariables) {
    if (name == to_string(v)) return v;
  }
  return std::nullopt;
}

bool is_signed_variable(MetVariable v) {
  return v == MetVariable::UGRD || v == MetVariable::VGRD;
}

std::vector<MetVariable> variables_for(PlantKind kind) {
  if (kind == PlantKind::PV) return {MetVariable::GHI, MetVariable::GHI_CS};
  return {MetVariable::UGRD, MetVariable::VGRD};
}

ParseResult<PowerSeriesMap> parse_power_csv(std::istream& in) {
  expect_header(in, "timestamp,zone,kind,power_mw", "power csv");
  std::map<PowerKey, std::pair<HourlySeries, std::vector<std::size_t>>> acc;
  std::vector<RowError> errors;
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 4) {
      errors.push_back({lineno, "expected 4 fields, got " +
                                    std::to_string(fields.size())});
      continue;
    }
    const auto ts = HourlyTimestamp::parse(fields[0]);
    if (!ts) {
      errors.push_back({lineno, "bad timestamp '" + std::string(fields[0]) + "'"});
      continue;
    }
    const auto zone = zone_from_string(fields[1]);
    if (!zone) {
      errors.push_back({lineno, "unknown zone '" + std::string(fields[1]) + "'"});
      continue;
    }
    const auto kind = plant_kind_from_string(fields[2]);
    if (!kind) {
      errors.push_back({lineno, "unknown kind '" + std::string(fields[2]) + "'"});
      continue;
    }
    HourlyPoint point;
    point.ts = *ts;
    if (fields[3].empty()) {
      point.missing = true;
    } else {
      const auto value = parse_double(fields[3]);
      if (!value) {
        errors.push_back({lineno, "bad power value '" + std::string(fields[3]) + "'"});
        continue;
      }
      if (*value < 0.0) {
        errors.push_back({lineno, "negative power " + std::string(fields[3])});
        continue;
      }
      point.value = *value;
    }
    auto& [series, lines] = acc[{*zone, *kind}];
    series.points.push_back(point);
    lines.push_back(lineno);
  }
  finalize_series(acc, errors);
  ParseResult<PowerSeriesMap> result;
  for (auto& [key, entry] : acc) result.value[key] = std::move(entry.first);
  result.row_errors = std::move(errors);
  return result;
}

ParseResult<MetSeriesMap> parse_met_csv(std::istream& in) {
  expect_header(in, "timestamp,province_id,variable,value", "met csv");
  std::map<MetKey, std::pair<HourlySeries, std::vector<std::size_t>>> acc;
  std::vector<RowError> errors;
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 4) {
      errors.push_back({lineno, "expected 4 fields, got " +
                                    std::to_string(fields.size())});
      continue;
    }
    const auto ts = HourlyTimestamp::parse(fields[0]);
    if (!ts) {
      errors.push_back({lineno, "bad timestamp '" + std::string(fields[0]) + "'"});
      continue;
    }
    const auto province = parse_int(fields[1]);
    if (!province || *province < 1 || *province > kProvinceCount) {
      errors.push_back({lineno, "province_id out of range '" +
                                    std::string(fields[1]) + "'"});
      continue;
    }
    const auto variable = met_variable_from_string(fields[2]);
    if (!variable) {
      errors.push_back({lineno, "unknown variable '" + std::string(fields[2]) + "'"});
      continue;
    }
    HourlyPoint point;
    point.ts = *ts;
    if (fields[3].empty()) {
      point.missing = true;
    } else {
      const auto value = parse_double(fields[3]);
      if (!value) {
        errors.push_back({lineno, "bad value '" + std::string(fields[3]) + "'"});
        continue;
      }
      point.value = *value;
    }
    auto& [series, lines] = acc[{int(*province), *variable}];
    series.points.push_back(point);
    lines.push_back(lineno);
  }
  finalize_series(acc, errors);
  ParseResult<MetSeriesMap> result;
  for (auto& [key, entry] : acc) result.value[key] = std::move(entry.first);
  result.row_errors = std::move(errors);
  return result;
}

void write_power_csv(const PowerSeriesMap& series, std::ostream& out) {
  out << "timestamp,zone,kind,power_mw\n";
  for (const auto& [key, s] : series) {
    for (const HourlyPoint& p : s.points) {
      out << p.ts.to_string() << ',' << to_string(key.first) << ','
          << to_string(key.second) << ',';
      if (!p.missing) out << format_double(p.value);
      out << '\n';
    }
  }
}

void write_met_csv(const MetSeriesMap& series, std::ostream& out) {
  out << "timestamp,province_id,variable,value\n";
  for (const auto& [key, s] : series) {
    for (const HourlyPoint& p : s.points) {
      out << p.ts.to_string() << ',' << key.first << ',' << to_string(key.second)
          << ',';
      if (!p.missing) out << format_double(p.value);
      out << '\n';
    }
  }
}

ParseResult<std::vector<MonthlyNationalTotal>> parse_totals_csv(std::istream& in) {
  expect_header(in, "year,month,kind,energy_mwh", "totals csv");
  ParseResult<std::vector<MonthlyNationalTotal>> result;
  std::set<std::tuple<int, int, PlantKind>> seen;
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 4) {
      result.row_errors.push_back({lineno, "expected 4 fields"});
      continue;
    }
    const auto year = parse_int(fields[0]);
    const auto month = parse_int(fields[1]);
    const auto kind = plant_kind_from_string(fields[2]);
    const auto energy = parse_double(fields[3]);
    if (!year || !month || *month < 1 || *month > 12 || !kind || !energy) {
      result.row_errors.push_back({lineno, "malformed totals row"});
      continue;
    }
    if (*energy < 0.0) {
      result.row_errors.push_back({lineno, "negative energy"});
      continue;
    }
    if (!seen.insert({int(*year), int(*month), *kind}).second) {
      result.row_errors.push_back({lineno, "duplicate (year,month,kind)"});
      continue;
    }
    result.value.push_back({int(*year), int(*month), *kind, *energy});
  }
  return result;
}

void write_totals_csv(const std::vector<MonthlyNationalTotal>& totals,
                      std::ostream& out) {
  out << "year,month,kind,energy_mwh\n";
  for (const MonthlyNationalTotal& t : totals) {
    out << t.year << ',' << t.month << ',' << to_string(t.kind) << ','
        << format_double(t.energy_mwh) << '\n';
  }
}

ParseResult<std::map<ZoneId, std::vector<int>>> parse_zones_csv(std::istream& in) {
  expect_header(in, "zone,province_id", "zones csv");
  ParseResult<std::map<ZoneId, std::vector<int>>> result;
  std::set<std::pair<ZoneId, int>> seen;
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 2) {
      result.row_errors.push_back({lineno, "expected 2 fields"});
      continue;
    }
    const auto zone = zone_from_string(fields[0]);
    const auto province = parse_int(fields[1]);
    if (!zone || !province || *province < 1 || *province > kProvinceCount) {
      result.row_errors.push_back({lineno, "malformed zone row"});
      continue;
    }
    if (!seen.insert({*zone, int(*province)}).second) {
      result.row_errors.push_back({lineno, "duplicate (zone,province)"});
      continue;
    }
    result.value[*zone].push_back(int(*province));
  }
  for (auto& [zone, provinces] : result.value)
    std::sort(provinces.begin(), provinces.end());
  return result;
}

ParseResult<GridField> parse_grid_csv(std::istream& in, HourlyTimestamp ts,
                                      MetVariable variable) {
  expect_header(in, "lat,lon,value", "grid csv");
  ParseResult<GridField> result;
  result.value.timestamp = ts;
  result.value.variable = variable;
  std::set<std::pair<double, double>> seen;
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 3) {
      result.row_errors.push_back({lineno, "expected 3 fields"});
      continue;
    }
    const auto lat = parse_double(fields[0]);
    const auto lon = parse_double(fields[1]);
    const auto value = parse_double(fields[2]);
    if (!lat || !lon || !value) {
      result.row_errors.push_back({lineno, "malformed grid row"});
      continue;
    }
    if (!seen.insert({*lat, *lon}).second) {
      result.row_errors.push_back({lineno, "duplicate (lat,lon)"});
      continue;
    }
    result.value.points.push_back({*lat, *lon, *value});
  }
  return result;
}

ParseResult<ProvinceMask> parse_mask_csv(std::istream& in) {
  expect_header(in, "lat,lon,province_id", "mask csv");
  ParseResult<ProvinceMask> result;
  std::set<std::pair<double, double>> seen;
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 3) {
      result.row_errors.push_back({lineno, "expected 3 fields"});
      continue;
    }
    const auto lat = parse_double(fields[0]);
    const auto lon = parse_double(fields[1]);
    const auto province = parse_int(fields[2]);
    if (!lat || !lon || !province || *province < 1 || *province > kProvinceCount) {
      result.row_errors.push_back({lineno, "malformed mask row"});
      continue;
    }
    if (!seen.insert({*lat, *lon}).second) {
      result.row_errors.push_back({lineno, "point assigned to two provinces"});
      continue;
    }
    result.value.entries.push_back({*lat, *lon, int(*province)});
  }
  return result;
}

ProvinceAggregate aggregate_grid_to_provinces(const GridField& field,
                                              const ProvinceMask& mask) {
  std::map<std::pair<double, double>, int> lookup;
  for (const ProvinceMask::Entry& e : mask.entries)
    lookup[{e.lat, e.lon}] = e.province;

  std::map<int, std::pair<double, std::size_t>> sums;  // province -> (sum, count)
  ProvinceAggregate result;
  for (const GridField::Point& p : field.points) {
    const auto it = lookup.find({p.lat, p.lon});
    if (it == lookup.end()) {
      ++result.unmatched_points;
      continue;
    }
    auto& [sum, count] = sums[it->second];
    sum += p.value;
    ++count;
  }
  for (const auto& [province, sc] : sums)
    result.mean_by_province[province] = sc.first / double(sc.second);
  return result;
}

SampleMatrix join_samples(const HourlySeries& power, const MetSeriesMap& met,
                          const std::vector<FeatureSpecEntry>& feature_spec,
                          ZoneId zone, PlantKind kind) {
  if (feature_spec.empty())
    throw std::invalid_argument("join_samples: empty feature spec");

  std::vector<const HourlySeries*> columns;
  SampleMatrix out;
  out.zone = zone;
  out.kind = kind;
  for (const auto& [province, variable] : feature_spec) {
    const auto it = met.find({province, variable});
    if (it == met.end())
      throw std::invalid_argument(
          "join_samples: no met series for province " + std::to_string(province) +
          " variable " + to_string(variable));
    columns.push_back(&it->second);
    out.feature_names.push_back("p" + std::to_string(province) + "." +
                                to_string(variable));
  }

  std::vector<double> row(feature_spec.size());
  for (const HourlyPoint& p : power.points) {
    if (p.missing) continue;
    bool complete = true;
    for (std::size_t c = 0; c < columns.size(); ++c) {
      const auto v = columns[c]->value_at(p.ts);
      if (!v) {
        complete = false;
        break;
      }
      row[c] = *v;
    }
    if (complete) out.push_row(p.ts, row, p.value);
  }
  return out;
}

void write_forecast_csv(const ForecastRun& run, std::ostream& out) {
  out << "run_date,zone,kind,lead_hour,timestamp,power_mw,persistence_flag\n";
  char date[16];
  std::snprintf(date, sizeof date, "%04d-%02d-%02d", run.run_date.year(),
                run.run_date.month(), run.run_date.day());
  for (int h = 1; h <= int(run.values.size()); ++h) {
    out << date << ',' << to_string(run.zone) << ',' << to_string(run.kind)
        << ',' << h << ',' << run.time_of(h).to_string() << ','
        << format_double(run.values[h - 1]) << ','
        << int(run.persistence_flag[h - 1]) << '\n';
  }
}

}  // namespace zonecast::ingest
