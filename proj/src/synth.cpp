#include "zonecast/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <stdexcept>

#include "zonecast/rng.hpp"

namespace zonecast::synth {

namespace {

using ingest::MetVariable;

// Stream tags keep the per-(purpose, province/zone) generators independent.
enum : std::uint64_t {
  kStreamClearness = 1,
  kStreamWindU = 2,
  kStreamWindV = 3,
  kStreamPowerNoise = 4,
  kStreamForecast = 5,
};

std::mt19937_64 make_stream(const SynthConfig& cfg, std::uint64_t tag,
                            std::uint64_t id) {
  return std::mt19937_64(derive_seed(cfg.rng_seed, tag * 0x10000 + id));
}

double season_factor(HourlyTimestamp ts) {
  return 1.0 + 0.35 * std::cos(2.0 * M_PI * (ts.day_of_year() - 172) / 365.25);
}

double diurnal_factor(int hour) {
  if (hour <= 6 || hour >= 18) return 0.0;
  return std::sin(M_PI * (hour - 6) / 12.0);
}

}  // namespace

double clear_sky_ghi(HourlyTimestamp ts, int province) {
  const double amplitude = 1000.0 * (1.0 + 0.01 * (province % 7 - 3));
  return amplitude * season_factor(ts) * diurnal_factor(ts.hour());
}

double wind_power_fraction(double speed, const SynthConfig& cfg) {
  if (speed < cfg.cut_in || speed >= cfg.cut_out) return 0.0;
  if (speed >= cfg.rated) return 1.0;
  const double c3 = cfg.cut_in * cfg.cut_in * cfg.cut_in;
  const double r3 = cfg.rated * cfg.rated * cfg.rated;
  return (speed * speed * speed - c3) / (r3 - c3);
}

void SynthConfig::validate() const {
  if (zones.empty()) throw std::invalid_argument("synth: no zones");
  std::set<int> seen;
  for (const ZoneSpec& z : zones) {
    if (z.provinces.empty())
      throw std::invalid_argument("synth: zone without provinces");
    if (!(z.pv_capacity_mw > 0.0) || !(z.wd_capacity_mw > 0.0))
      throw std::invalid_argument("synth: capacities must be > 0");
    for (const int p : z.provinces) {
      if (p < 1 || p > kProvinceCount)
        throw std::invalid_argument("synth: province id out of range");
      if (!seen.insert(p).second)
        throw std::invalid_argument("synth: province in two zones");
    }
  }
  if (!(clearness_persistence >= 0.0 && clearness_persistence < 1.0) ||
      !(wd_ar_coeff >= 0.0 && wd_ar_coeff < 1.0))
    throw std::invalid_argument("synth: AR coefficients must be in [0,1)");
  if (!(cut_in < rated && rated < cut_out))
    throw std::invalid_argument("synth: need cut_in < rated < cut_out");
  if (noise_frac < 0.0 || forecast_noise_growth < 0.0)
    throw std::invalid_argument("synth: noise settings must be >= 0");
  if (end_day < start_day) throw std::invalid_argument("synth: end before start");
  if (forecast_horizon_hours < 24 || forecast_horizon_hours % 24 != 0)
    throw std::invalid_argument("synth: horizon must be whole days >= 24");
  for (const HourlyTimestamp d : run_dates) {
    if (d.hour() != 0) throw std::invalid_argument("synth: run date not 00:00");
  }
}

namespace {

struct Frame {
  HourlyTimestamp first;  // start_day 00:00
  std::int64_t hours = 0;

  HourlyTimestamp stamp(std::int64_t i) const { return first + i; }
};

Frame make_frame(const SynthConfig& cfg) {
  Frame f;
  f.first = cfg.start_day.start_of_day();
  const HourlyTimestamp last = cfg.end_day.start_of_day() + 23;
  f.hours = last - f.first + 1;
  return f;
}

// AR(1) met truth for one province; PV also gets the deterministic
// clear-sky series.
void generate_met_truth(const SynthConfig& cfg, const Frame& frame, PlantKind kind,
                        int province, ingest::MetSeriesMap& met) {
  if (kind == PlantKind::PV) {
    HourlySeries ghi, ghi_cs;
    auto rng = make_stream(cfg, kStreamClearness, std::uint64_t(province));
    const double mean_clearness = 0.75, sd_clearness = 0.15;
    const double rho = cfg.clearness_persistence;
    const double innovation = sd_clearness * std::sqrt(1.0 - rho * rho);
    double clearness = mean_clearness;
    for (std::int64_t i = 0; i < frame.hours; ++i) {
      const HourlyTimestamp ts = frame.stamp(i);
      clearness = mean_clearness + rho * (clearness - mean_clearness) +
                  innovation * standard_normal(rng);
      clearness = std::clamp(clearness, 0.05, 1.0);
      const double cs = clear_sky_ghi(ts, province);
      ghi_cs.points.push_back({ts, cs, false});
      ghi.points.push_back({ts, clearness * cs, false});
    }
    met[{province, MetVariable::GHI}] = std::move(ghi);
    met[{province, MetVariable::GHI_CS}] = std::move(ghi_cs);
  } else {
    HourlySeries ugrd, vgrd;
    auto rng_u = make_stream(cfg, kStreamWindU, std::uint64_t(province));
    auto rng_v = make_stream(cfg, kStreamWindV, std::uint64_t(province));
    const double phi = cfg.wd_ar_coeff;
    const double innovation = cfg.wd_speed_sigma * std::sqrt(1.0 - phi * phi);
    const double mean_u = cfg.wd_mean_speed * std::cos(0.7 * province);
    const double mean_v = cfg.wd_mean_speed * std::sin(0.7 * province);
    double u = mean_u, v = mean_v;
    for (std::int64_t i = 0; i < frame.hours; ++i) {
      const HourlyTimestamp ts = frame.stamp(i);
      u = mean_u + phi * (u - mean_u) + innovation * standard_normal(rng_u);
      v = mean_v + phi * (v - mean_v) + innovation * standard_normal(rng_v);
      ugrd.points.push_back({ts, u, false});
      vgrd.points.push_back({ts, v, false});
    }
    met[{province, MetVariable::UGRD}] = std::move(ugrd);
    met[{province, MetVariable::VGRD}] = std::move(vgrd);
  }
}

double zone_power_truth(const SynthConfig& cfg, const ZoneSpec& zone,
                        PlantKind kind, const ingest::MetSeriesMap& met,
                        HourlyTimestamp ts) {
  if (kind == PlantKind::PV) {
    double mean_ghi = 0.0;
    for (const int p : zone.provinces)
      mean_ghi += *met.at({p, MetVariable::GHI}).value_at(ts);
    mean_ghi /= double(zone.provinces.size());
    return zone.pv_capacity_mw * cfg.pv_efficiency * mean_ghi / 1000.0;
  }
  double mean_speed = 0.0;
  for (const int p : zone.provinces)
    mean_speed += std::hypot(*met.at({p, MetVariable::UGRD}).value_at(ts),
                             *met.at({p, MetVariable::VGRD}).value_at(ts));
  mean_speed /= double(zone.provinces.size());
  return zone.wd_capacity_mw * wind_power_fraction(mean_speed, cfg);
}

SynthDataset generate_kind(const SynthConfig& cfg, PlantKind kind) {
  cfg.validate();
  const Frame frame = make_frame(cfg);

  SynthDataset data;
  for (const ZoneSpec& z : cfg.zones) {
    data.zone_provinces[z.zone] = z.provinces;
    for (const int p : z.provinces) generate_met_truth(cfg, frame, kind, p, data.met);
  }

  for (const ZoneSpec& z : cfg.zones) {
    HourlySeries series;
    auto noise = make_stream(cfg, kStreamPowerNoise,
                             std::uint64_t(z.zone) * 2 +
                                 std::uint64_t(kind == PlantKind::WD));
    for (std::int64_t i = 0; i < frame.hours; ++i) {
      const HourlyTimestamp ts = frame.stamp(i);
      double value = zone_power_truth(cfg, z, kind, data.met, ts);
      if (cfg.noise_frac > 0.0)
        value *= 1.0 + cfg.noise_frac * standard_normal(noise);
      series.points.push_back({ts, std::max(0.0, value), false});
    }
    data.power[{z.zone, kind}] = std::move(series);
  }

  // Exact monthly sums, accumulated zone-major then time-minor -- the same
  // order monthly_rescale uses, so the rescale factor is exactly 1.
  std::map<std::pair<int, int>, double> sums;
  for (const auto& [key, series] : data.power) {
    for (const HourlyPoint& p : series.points)
      sums[{p.ts.year(), p.ts.month()}] += p.value;
  }
  for (const auto& [ym, energy] : sums)
    data.totals.push_back({ym.first, ym.second, kind, energy});

  // Forecast met: truth degraded by noise growing with the lead day.
  // Clear-sky irradiance is astronomy, so its forecast is exact.
  for (const HourlyTimestamp run_date : cfg.run_dates) {
    ingest::MetSeriesMap fmet;
    for (const ZoneSpec& z : cfg.zones) {
      for (const int p : z.provinces) {
        for (const MetVariable v : ingest::variables_for(kind)) {
          auto rng = make_stream(
              cfg, kStreamForecast,
              std::uint64_t(run_date.epoch_hours()) * 997 +
                  std::uint64_t(p) * 8 + std::uint64_t(v));
          HourlySeries series;
          for (int h = 1; h <= cfg.forecast_horizon_hours; ++h) {
            const HourlyTimestamp ts = run_date + h;
            const auto truth = data.met.at({p, v}).value_at(ts);
            if (!truth)
              throw std::invalid_argument(
                  "synth: run date horizon extends past the generated range");
            const int lead_day = (h - 1) / 24 + 1;
            const double scale = cfg.forecast_noise_growth * lead_day;
            double value = *truth;
            if (v == MetVariable::GHI) {
              value *= std::max(0.0, 1.0 + scale * standard_normal(rng));
            } else if (v != MetVariable::GHI_CS) {
              value += scale * cfg.wd_speed_sigma * standard_normal(rng);
            }
            series.points.push_back({ts, value, false});
          }
          fmet[{p, v}] = std::move(series);
        }
      }
    }
    data.forecasts[run_date.epoch_hours()] = std::move(fmet);
  }
  return data;
}

}  // namespace

SynthDataset generate_pv_dataset(const SynthConfig& cfg) {
  return generate_kind(cfg, PlantKind::PV);
}

SynthDataset generate_wd_dataset(const SynthConfig& cfg) {
  return generate_kind(cfg, PlantKind::WD);
}

SynthDataset generate_dataset(const SynthConfig& cfg) {
  SynthDataset pv = generate_pv_dataset(cfg);
  SynthDataset wd = generate_wd_dataset(cfg);
  pv.power.merge(wd.power);
  pv.met.merge(wd.met);
  pv.totals.insert(pv.totals.end(), wd.totals.begin(), wd.totals.end());
  for (auto& [run, fmet] : wd.forecasts) pv.forecasts[run].merge(fmet);
  return pv;
}

void write_dataset(const SynthDataset& data, const std::string& dir) {
  const std::filesystem::path base(dir);
  std::filesystem::create_directories(base);
  auto open = [&](const std::string& name) {
    std::ofstream out(base / name);
    if (!out)
      throw std::runtime_error("synth: cannot write " + (base / name).string());
    return out;
  };
  {
    auto out = open("power.csv");
    ingest::write_power_csv(data.power, out);
  }
  {
    auto out = open("met.csv");
    ingest::write_met_csv(data.met, out);
  }
  {
    auto out = open("totals.csv");
    ingest::write_totals_csv(data.totals, out);
  }
  {
    auto out = open("zones.csv");
    out << "zone,province_id\n";
    for (const auto& [zone, provinces] : data.zone_provinces) {
      for (const int p : provinces)
        out << to_string(zone) << ',' << p << '\n';
    }
  }
  for (const auto& [run_hours, fmet] : data.forecasts) {
    const HourlyTimestamp run = HourlyTimestamp::from_epoch_hours(run_hours);
    char name[48];
    std::snprintf(name, sizeof name, "forecast_met_%04d-%02d-%02d.csv",
                  run.year(), run.month(), run.day());
    auto out = open(name);
    ingest::write_met_csv(fmet, out);
  }
}

}  // namespace zonecast::synth
