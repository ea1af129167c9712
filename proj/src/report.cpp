#include "zonecast/report.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "zonecast/io_util.hpp"

namespace zonecast::eval {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

struct ChartSeries {
  std::string name;
  std::string color;
  std::vector<std::pair<double, double>> points;  // NaN y breaks the line
};

struct Chart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<ChartSeries> series;
  std::vector<std::pair<double, std::string>> x_ticks;  // empty = automatic
};

double nice_step(double range) {
  const double raw = range / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double frac = raw / mag;
  if (frac <= 1.0) return mag;
  if (frac <= 2.0) return 2.0 * mag;
  if (frac <= 5.0) return 5.0 * mag;
  return 10.0 * mag;
}

void write_svg(const Chart& chart, std::ostream& out) {
  const double width = 860, height = 480;
  const double left = 70, right = width - 170, top = 40, bottom = height - 50;

  double x_min = 0, x_max = 1, y_min = 0, y_max = 1;
  bool first = true;
  for (const ChartSeries& s : chart.series) {
    for (const auto& [x, y] : s.points) {
      if (std::isnan(y)) continue;
      if (first) {
        x_min = x_max = x;
        y_min = y_max = y;
        first = false;
      } else {
        x_min = std::min(x_min, x);
        x_max = std::max(x_max, x);
        y_min = std::min(y_min, y);
        y_max = std::max(y_max, y);
      }
    }
  }
  if (y_min > 0.0) y_min = 0.0;  // anchor power/error axes at zero
  if (y_max <= y_min) y_max = y_min + 1.0;
  if (x_max <= x_min) x_max = x_min + 1.0;
  y_max += (y_max - y_min) * 0.05;

  const auto px = [&](double x) {
    return left + (x - x_min) / (x_max - x_min) * (right - left);
  };
  const auto py = [&](double y) {
    return bottom - (y - y_min) / (y_max - y_min) * (bottom - top);
  };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << ' '
      << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << (left + right) / 2 << "\" y=\"22\" font-size=\"15\" "
         "text-anchor=\"middle\" font-family=\"sans-serif\">"
      << chart.title << "</text>\n";

  // Axes.
  out << "<line x1=\"" << left << "\" y1=\"" << bottom << "\" x2=\"" << right
      << "\" y2=\"" << bottom << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left
      << "\" y2=\"" << bottom << "\" stroke=\"black\"/>\n";

  // Y grid and ticks.
  const double y_step = nice_step(y_max - y_min);
  for (double y = std::ceil(y_min / y_step) * y_step; y <= y_max + 1e-12;
       y += y_step) {
    out << "<line x1=\"" << left << "\" y1=\"" << py(y) << "\" x2=\"" << right
        << "\" y2=\"" << py(y) << "\" stroke=\"#dddddd\"/>\n";
    std::ostringstream label;
    label.precision(6);
    label << y;
    out << "<text x=\"" << left - 6 << "\" y=\"" << py(y) + 4
        << "\" font-size=\"11\" text-anchor=\"end\" "
           "font-family=\"sans-serif\">"
        << label.str() << "</text>\n";
  }

  // X ticks.
  if (!chart.x_ticks.empty()) {
    for (const auto& [x, label] : chart.x_ticks) {
      out << "<line x1=\"" << px(x) << "\" y1=\"" << bottom << "\" x2=\""
          << px(x) << "\" y2=\"" << bottom + 4 << "\" stroke=\"black\"/>\n";
      out << "<text x=\"" << px(x) << "\" y=\"" << bottom + 18
          << "\" font-size=\"11\" text-anchor=\"middle\" "
             "font-family=\"sans-serif\">"
          << label << "</text>\n";
    }
  } else {
    const double x_step = nice_step(x_max - x_min);
    for (double x = std::ceil(x_min / x_step) * x_step; x <= x_max + 1e-12;
         x += x_step) {
      out << "<line x1=\"" << px(x) << "\" y1=\"" << bottom << "\" x2=\""
          << px(x) << "\" y2=\"" << bottom + 4 << "\" stroke=\"black\"/>\n";
      std::ostringstream label;
      label.precision(6);
      label << x;
      out << "<text x=\"" << px(x) << "\" y=\"" << bottom + 18
          << "\" font-size=\"11\" text-anchor=\"middle\" "
             "font-family=\"sans-serif\">"
          << label.str() << "</text>\n";
    }
  }

  // Axis labels.
  out << "<text x=\"" << (left + right) / 2 << "\" y=\"" << height - 12
      << "\" font-size=\"12\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\">"
      << chart.x_label << "</text>\n";
  out << "<text x=\"16\" y=\"" << (top + bottom) / 2
      << "\" font-size=\"12\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" transform=\"rotate(-90 16 "
      << (top + bottom) / 2 << ")\">" << chart.y_label << "</text>\n";

  // Series polylines, broken at NaN.
  for (const ChartSeries& s : chart.series) {
    std::ostringstream path;
    bool open = false;
    for (const auto& [x, y] : s.points) {
      if (std::isnan(y)) {
        open = false;
        continue;
      }
      path << (open ? " L" : " M") << px(x) << ' ' << py(y);
      open = true;
    }
    out << "<path d=\"" << path.str() << "\" fill=\"none\" stroke=\"" << s.color
        << "\" stroke-width=\"1.8\"/>\n";
  }

  // Legend.
  double ly = top + 8;
  for (const ChartSeries& s : chart.series) {
    out << "<line x1=\"" << right + 12 << "\" y1=\"" << ly << "\" x2=\""
        << right + 36 << "\" y2=\"" << ly << "\" stroke=\"" << s.color
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << right + 42 << "\" y=\"" << ly + 4
        << "\" font-size=\"11\" font-family=\"sans-serif\">" << s.name
        << "</text>\n";
    ly += 18;
  }
  out << "</svg>\n";
}

void write_chart_file(const Chart& chart, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("emit_report: cannot write " + path.string());
  write_svg(chart, out);
}

std::string month_label(int year, int month) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d", year, month);
  return buf;
}

}  // namespace

void write_metrics_csv(const std::vector<MetricRecord>& records,
                       std::ostream& out) {
  out << "year,month,zone,kind,lead_day,nmbe,nrmse,n_samples,m_norm\n";
  for (const MetricRecord& r : records) {
    out << r.year << ',' << r.month << ',' << r.zone << ',' << to_string(r.kind)
        << ',' << r.lead_day << ',' << format_double(r.nmbe) << ','
        << format_double(r.nrmse) << ',' << r.n_samples << ','
        << format_double(r.m_norm) << '\n';
  }
}

std::vector<MetricRecord> parse_metrics_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) ||
      trim(line) != "year,month,zone,kind,lead_day,nmbe,nrmse,n_samples,m_norm")
    throw std::runtime_error("metrics csv: bad header");
  std::vector<MetricRecord> records;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 9)
      throw std::runtime_error("metrics csv: expected 9 fields");
    MetricRecord r;
    const auto year = parse_int(fields[0]);
    const auto month = parse_int(fields[1]);
    const auto kind = plant_kind_from_string(fields[3]);
    const auto lead = parse_int(fields[4]);
    const auto nmbe_v = parse_double(fields[5]);
    const auto nrmse_v = parse_double(fields[6]);
    const auto n = parse_int(fields[7]);
    const auto m_norm = parse_double(fields[8]);
    if (!year || !month || !kind || !lead || !nmbe_v || !nrmse_v || !n || !m_norm)
      throw std::runtime_error("metrics csv: malformed row '" + line + "'");
    r.year = int(*year);
    r.month = int(*month);
    r.zone = std::string(fields[2]);
    r.kind = *kind;
    r.lead_day = int(*lead);
    r.nmbe = *nmbe_v;
    r.nrmse = *nrmse_v;
    r.n_samples = std::size_t(*n);
    r.m_norm = *m_norm;
    records.push_back(std::move(r));
  }
  return records;
}

void emit_report(const std::vector<MetricRecord>& records,
                 const std::string& out_dir,
                 const std::vector<RunComparison>& sample_runs) {
  if (records.empty()) throw std::invalid_argument("emit_report: no records");
  const std::filesystem::path dir(out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);

  {
    std::ofstream csv(dir / "metrics.csv");
    if (!csv)
      throw std::runtime_error("emit_report: cannot write " +
                               (dir / "metrics.csv").string());
    write_metrics_csv(records, csv);
  }

  // Lead-day charts: one per (month, kind), national series.
  std::set<std::tuple<int, int, PlantKind>> month_kinds;
  std::set<PlantKind> kinds;
  for (const MetricRecord& r : records) {
    month_kinds.insert({r.year, r.month, r.kind});
    kinds.insert(r.kind);
  }
  for (const auto& [year, month, kind] : month_kinds) {
    Chart chart;
    chart.title = std::string(to_string(kind)) + " national scores vs lead day, " +
                  month_label(year, month);
    chart.x_label = "lead day";
    chart.y_label = "score (fraction of monthly max)";
    ChartSeries nmbe_s{"NMBE", kPalette[0], {}};
    ChartSeries nrmse_s{"NRMSE", kPalette[1], {}};
    for (const MetricRecord& r : records) {
      if (r.year != year || r.month != month || r.kind != kind ||
          r.zone != "ITALY" || r.lead_day == 0)
        continue;
      nmbe_s.points.push_back({double(r.lead_day), r.nmbe});
      nrmse_s.points.push_back({double(r.lead_day), r.nrmse});
    }
    std::sort(nmbe_s.points.begin(), nmbe_s.points.end());
    std::sort(nrmse_s.points.begin(), nrmse_s.points.end());
    chart.series = {nmbe_s, nrmse_s};
    char name[64];
    std::snprintf(name, sizeof name, "leadday_%s_%04d-%02d.svg",
                  to_string(kind), year, month);
    write_chart_file(chart, dir / name);
  }

  // Zone charts: NRMSE over the whole horizon per test month.
  for (const PlantKind kind : kinds) {
    std::vector<std::pair<int, int>> months;
    std::set<std::string> zones;
    for (const MetricRecord& r : records) {
      if (r.kind != kind || r.lead_day != 0) continue;
      if (std::find(months.begin(), months.end(),
                    std::make_pair(r.year, r.month)) == months.end())
        months.push_back({r.year, r.month});
      if (r.zone != "ITALY") zones.insert(r.zone);
    }
    std::sort(months.begin(), months.end());

    Chart chart;
    chart.title = std::string(to_string(kind)) +
                  " NRMSE per zone (15-day horizon) vs test month";
    chart.x_label = "test month";
    chart.y_label = "NRMSE";
    for (std::size_t i = 0; i < months.size(); ++i)
      chart.x_ticks.push_back(
          {double(i), month_label(months[i].first, months[i].second)});

    std::size_t color = 0;
    auto series_for = [&](const std::string& zone) {
      ChartSeries s{zone, kPalette[color++ % 8], {}};
      for (std::size_t i = 0; i < months.size(); ++i) {
        for (const MetricRecord& r : records) {
          if (r.kind == kind && r.zone == zone && r.lead_day == 0 &&
              r.year == months[i].first && r.month == months[i].second) {
            s.points.push_back({double(i), r.nrmse});
            break;
          }
        }
      }
      return s;
    };
    for (const std::string& zone : zones) chart.series.push_back(series_for(zone));
    chart.series.push_back(series_for("ITALY"));

    char name[40];
    std::snprintf(name, sizeof name, "zones_by_month_%s.svg", to_string(kind));
    write_chart_file(chart, dir / name);
  }

  // Forecast-vs-metering traces.
  for (const RunComparison& sample : sample_runs) {
    Chart chart;
    char date[16];
    std::snprintf(date, sizeof date, "%04d-%02d-%02d", sample.run.run_date.year(),
                  sample.run.run_date.month(), sample.run.run_date.day());
    chart.title = std::string(to_string(sample.run.kind)) + " " +
                  to_string(sample.run.zone) + ", run of " + date;
    chart.x_label = "lead hour";
    chart.y_label = "power [MW]";
    ChartSeries forecast{"forecast", kPalette[1], {}};
    ChartSeries metering{"metering", kPalette[0], {}};
    for (int h = 1; h <= int(sample.run.values.size()); ++h) {
      forecast.points.push_back({double(h), sample.run.values[std::size_t(h - 1)]});
      metering.points.push_back({double(h), sample.actual[std::size_t(h - 1)]});
    }
    chart.series = {metering, forecast};
    char name[64];
    std::snprintf(name, sizeof name, "run_%s_%s_%s.svg",
                  to_string(sample.run.kind), to_string(sample.run.zone), date);
    write_chart_file(chart, dir / name);
  }
}

}  // namespace zonecast::eval
