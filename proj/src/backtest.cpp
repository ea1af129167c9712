#include "zonecast/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "zonecast/metrics.hpp"
#include "zonecast/parallel.hpp"
#include "zonecast/rng.hpp"

namespace zonecast::eval {

namespace {

using ingest::MetSeriesMap;
using ingest::MetVariable;

// Element-wise zonal sum; a stamp is kept when every part has a value.
HourlySeries sum_series(const std::vector<const HourlySeries*>& parts) {
  HourlySeries out;
  if (parts.empty()) return out;
  for (const HourlyPoint& p : parts.front()->points) {
    if (p.missing) continue;
    double total = p.value;
    bool complete = true;
    for (std::size_t z = 1; z < parts.size(); ++z) {
      const auto v = parts[z]->value_at(p.ts);
      if (!v) {
        complete = false;
        break;
      }
      total += *v;
    }
    if (complete) out.points.push_back({p.ts, total, false});
  }
  return out;
}

void check_coverage(const HourlySeries& s, HourlyTimestamp begin,
                    HourlyTimestamp end, const std::string& label) {
  std::vector<std::pair<HourlyTimestamp, HourlyTimestamp>> gaps;
  bool open = false;
  for (HourlyTimestamp ts = begin; ts < end; ts = ts + 1) {
    if (s.value_at(ts)) {
      open = false;
      continue;
    }
    if (open)
      gaps.back().second = ts;
    else
      gaps.push_back({ts, ts});
    open = true;
  }
  if (gaps.empty()) return;
  std::string msg = "backtest: measured power for " + label + " has " +
                    std::to_string(gaps.size()) +
                    " gap range(s) in the evaluation window:";
  for (std::size_t i = 0; i < gaps.size() && i < 5; ++i)
    msg += " [" + gaps[i].first.to_string() + " .. " +
           gaps[i].second.to_string() + "]";
  if (gaps.size() > 5) msg += " ...";
  throw std::runtime_error(msg);
}

}  // namespace

HourlySeries slice_series(const HourlySeries& s, HourlyTimestamp begin,
                          HourlyTimestamp end) {
  HourlySeries out;
  auto lo = std::lower_bound(
      s.points.begin(), s.points.end(), begin,
      [](const HourlyPoint& p, HourlyTimestamp t) { return p.ts < t; });
  auto hi = std::lower_bound(
      lo, s.points.end(), end,
      [](const HourlyPoint& p, HourlyTimestamp t) { return p.ts < t; });
  out.points.assign(lo, hi);
  return out;
}

TrainedZone train_zone(const BacktestInputs& inputs, const BacktestConfig& cfg,
                       PlantKind kind, ZoneId zone, HourlyTimestamp train_end) {
  // National totals cover every zone, so the rescale must see all of them
  // even when a single zone is being trained.
  std::map<ZoneId, HourlySeries> zonal;
  for (const auto& [key, series] : inputs.power) {
    if (key.second == kind)
      zonal[key.first] = slice_series(series, cfg.train_start, train_end);
  }
  if (!zonal.count(zone))
    throw std::runtime_error(std::string("train_zone: no measured power for ") +
                             to_string(zone) + "/" + to_string(kind));
  std::map<ZoneId, HourlySeries> rescaled =
      preprocess::monthly_rescale(zonal, inputs.totals, kind);

  TrainedZone zt;
  zt.clean_power =
      preprocess::spline_fill(rescaled.at(zone), cfg.preprocess.max_gap_hours);

  const std::vector<int>& provinces = inputs.zone_provinces.at(zone);
  MetSeriesMap met_window;
  for (const int p : provinces) {
    for (const MetVariable v : ingest::variables_for(kind)) {
      const auto it = inputs.met.find({p, v});
      if (it == inputs.met.end())
        throw std::runtime_error("train_zone: no measured met series for province " +
                                 std::to_string(p) + " variable " +
                                 ingest::to_string(v));
      met_window[{p, v}] = preprocess::spline_fill(
          slice_series(it->second, cfg.train_start, train_end),
          cfg.preprocess.max_gap_hours, !ingest::is_signed_variable(v));
    }
  }

  pipeline::FeatureBlock knn_block = pipeline::build_features(
      met_window, provinces, {kind, pipeline::Learner::KNN});
  pipeline::FeatureBlock qrf_block = pipeline::build_features(
      met_window, provinces, {kind, pipeline::Learner::QRF});
  SampleMatrix knn_mat = pipeline::to_samples(knn_block, zt.clean_power, zone, kind);
  SampleMatrix qrf_mat = pipeline::to_samples(qrf_block, zt.clean_power, zone, kind);

  if (kind == PlantKind::PV && knn_mat.rows() > 0) {
    // Drop safety-cone outliers from both training matrices; the matrices
    // share row timestamps by construction.
    std::vector<std::pair<double, double>> pairs;
    pairs.reserve(knn_mat.rows());
    for (std::size_t i = 0; i < knn_mat.rows(); ++i)
      pairs.emplace_back(knn_mat.row(i)[0], knn_mat.targets[i]);
    const preprocess::ConeMask mask = preprocess::cone_filter(pairs, cfg.preprocess);
    auto filter = [&](const SampleMatrix& m) {
      SampleMatrix kept;
      kept.zone = m.zone;
      kept.kind = m.kind;
      kept.feature_names = m.feature_names;
      for (std::size_t i = 0; i < m.rows(); ++i) {
        if (!mask.outlier[i]) kept.push_row(m.timestamps[i], m.row(i), m.targets[i]);
      }
      return kept;
    };
    knn_mat = filter(knn_mat);
    qrf_mat = filter(qrf_mat);
  }

  knn::KnnParams knn_params = cfg.knn;
  if (kind == PlantKind::WD) {
    // The calendar-periodicity trick applies to PV only.
    knn_params.month_window.reset();
    knn_params.hour_window.reset();
  }
  qrf::QrfParams qrf_params = cfg.qrf;
  qrf_params.seed = derive_seed(
      cfg.qrf.seed,
      std::uint64_t(train_end.epoch_hours()) * 16 + std::uint64_t(zone) * 2 +
          std::uint64_t(kind == PlantKind::WD));
  zt.knn_model = knn::fit_knn(knn_mat, knn_params);
  zt.qrf_model = qrf::fit_qrf(qrf_mat, qrf_params, cfg.threads);
  return zt;
}

SampleMatrix pv_tail_matrix(const BacktestInputs& inputs, ZoneId zone,
                            HourlyTimestamp run_date, int n_weeks) {
  const std::vector<int>& provinces = inputs.zone_provinces.at(zone);
  const HourlyTimestamp tail_begin = run_date - std::int64_t(n_weeks) * 7 * 24 + 1;
  MetSeriesMap tail_met;
  for (const int p : provinces) {
    for (const MetVariable v : ingest::variables_for(PlantKind::PV))
      tail_met[{p, v}] =
          slice_series(inputs.met.at({p, v}), tail_begin, run_date + 1);
  }
  const pipeline::FeatureBlock tail_block = pipeline::build_features(
      tail_met, provinces, {PlantKind::PV, pipeline::Learner::KNN});
  return pipeline::to_samples(
      tail_block,
      slice_series(inputs.power.at({zone, PlantKind::PV}), tail_begin,
                   run_date + 1),
      zone, PlantKind::PV);
}

BacktestResult backtest(const BacktestInputs& inputs, const BacktestConfig& cfg) {
  if (cfg.test_months.empty())
    throw std::invalid_argument("backtest: no test months");
  if (cfg.zones.empty() || cfg.kinds.empty())
    throw std::invalid_argument("backtest: no zones or kinds");
  std::vector<std::pair<int, int>> months = cfg.test_months;
  std::sort(months.begin(), months.end());
  for (const auto& [year, month] : months) {
    if (HourlyTimestamp::from_ymdh(year, month, 1, 0) <= cfg.train_start)
      throw std::invalid_argument("backtest: test month not after train_start");
  }
  for (const ZoneId zone : cfg.zones) {
    if (!inputs.zone_provinces.count(zone))
      throw std::invalid_argument(std::string("backtest: no province list for ") +
                                  to_string(zone));
  }

  // Every scored stamp must be measured: the first run predicts from day 1
  // of the first month, the last reaches 360 h past the last month's end.
  {
    const auto [y0, m0] = months.front();
    const auto [y1, m1] = months.back();
    const HourlyTimestamp eval_begin = HourlyTimestamp::from_ymdh(y0, m0, 1, 0) + 1;
    const HourlyTimestamp eval_end =
        HourlyTimestamp::from_ymdh(y1, m1, days_in_month(y1, m1), 0) +
        (kHorizonHours + 1);
    for (const PlantKind kind : cfg.kinds) {
      for (const ZoneId zone : cfg.zones) {
        const auto it = inputs.power.find({zone, kind});
        if (it == inputs.power.end())
          throw std::runtime_error(std::string("backtest: no measured power for ") +
                                   to_string(zone) + "/" + to_string(kind));
        check_coverage(it->second, eval_begin, eval_end,
                       std::string(to_string(zone)) + "/" + to_string(kind));
      }
    }
  }

  BacktestResult result;

  for (const auto& [year, month] : months) {
    const HourlyTimestamp train_end = HourlyTimestamp::from_ymdh(year, month, 1, 0);
    const int n_days = days_in_month(year, month);
    const bool first_month =
        year == months.front().first && month == months.front().second;

    for (const PlantKind kind : cfg.kinds) {
      std::vector<TrainedZone> training(cfg.zones.size());
      for (std::size_t zi = 0; zi < cfg.zones.size(); ++zi)
        training[zi] = train_zone(inputs, cfg, kind, cfg.zones[zi], train_end);

      // One forecast run per day of the month, all zones. Forecast files
      // are loaded up front so the loader need not be thread-safe.
      std::vector<MetSeriesMap> forecast_met(static_cast<std::size_t>(n_days));
      for (int d = 0; d < n_days; ++d)
        forecast_met[std::size_t(d)] = inputs.forecast_loader(
            HourlyTimestamp::from_ymdh(year, month, d + 1, 0));

      std::vector<std::vector<ForecastRun>> runs(
          cfg.zones.size(),
          std::vector<ForecastRun>(static_cast<std::size_t>(n_days)));
      parallel_for(std::size_t(n_days), cfg.threads, [&](std::size_t d) {
        const HourlyTimestamp run_date =
            HourlyTimestamp::from_ymdh(year, month, int(d) + 1, 0);
        for (std::size_t zi = 0; zi < cfg.zones.size(); ++zi) {
          const ZoneId zone = cfg.zones[zi];
          SampleMatrix tail;
          const SampleMatrix* tail_ptr = nullptr;
          if (kind == PlantKind::PV && cfg.run.postprocess.enabled) {
            tail = pv_tail_matrix(inputs, zone, run_date,
                                  cfg.run.postprocess.n_weeks);
            tail_ptr = &tail;
          }
          runs[zi][d] = pipeline::run_forecast(
              training[zi].knn_model, training[zi].qrf_model, forecast_met[d],
              inputs.zone_provinces.at(zone), run_date, zone, kind, cfg.run,
              tail_ptr);
        }
      });

      // Pooled scores per zone plus the summed national series.
      struct Scored {
        std::string label;
        const HourlySeries* measured = nullptr;
        double m_norm = 0.0;
        std::vector<const ForecastRun*> day_runs;
      };

      std::vector<const HourlySeries*> zone_measured;
      std::vector<const HourlySeries*> zone_clean;
      for (std::size_t zi = 0; zi < cfg.zones.size(); ++zi) {
        zone_measured.push_back(&inputs.power.at({cfg.zones[zi], kind}));
        zone_clean.push_back(&training[zi].clean_power);
      }
      const HourlySeries italy_measured = sum_series(zone_measured);
      const HourlySeries italy_clean = sum_series(zone_clean);

      std::vector<ForecastRun> italy_runs(static_cast<std::size_t>(n_days));
      for (int d = 0; d < n_days; ++d) {
        ForecastRun& sum = italy_runs[std::size_t(d)];
        sum = runs[0][std::size_t(d)];
        for (std::size_t zi = 1; zi < cfg.zones.size(); ++zi) {
          const ForecastRun& r = runs[zi][std::size_t(d)];
          for (int h = 0; h < kHorizonHours; ++h) {
            sum.values[std::size_t(h)] += r.values[std::size_t(h)];
            sum.persistence_flag[std::size_t(h)] |=
                r.persistence_flag[std::size_t(h)];
          }
        }
      }

      std::vector<Scored> scored;
      for (std::size_t zi = 0; zi < cfg.zones.size(); ++zi) {
        Scored s;
        s.label = to_string(cfg.zones[zi]);
        s.measured = zone_measured[zi];
        s.m_norm = monthly_norm(training[zi].clean_power, month);
        for (int d = 0; d < n_days; ++d)
          s.day_runs.push_back(&runs[zi][std::size_t(d)]);
        scored.push_back(std::move(s));
      }
      {
        Scored s;
        s.label = "ITALY";
        s.measured = &italy_measured;
        s.m_norm = monthly_norm(italy_clean, month);
        for (int d = 0; d < n_days; ++d)
          s.day_runs.push_back(&italy_runs[std::size_t(d)]);
        scored.push_back(std::move(s));
      }

      for (const Scored& s : scored) {
        if (!(s.m_norm > 0.0))
          throw std::runtime_error("backtest: degenerate monthly norm for " +
                                   s.label);
        auto pool = [&](int lead_day) {
          std::vector<double> pred, actual;
          const int h_begin = lead_day == 0 ? 1 : (lead_day - 1) * 24 + 1;
          const int h_end = lead_day == 0 ? kHorizonHours : lead_day * 24;
          for (int d = 0; d < n_days; ++d) {
            const ForecastRun& run = *s.day_runs[std::size_t(d)];
            for (int h = h_begin; h <= h_end; ++h) {
              const auto v = s.measured->value_at(run.time_of(h));
              if (!v) continue;  // ruled out by the coverage check
              pred.push_back(run.values[std::size_t(h - 1)]);
              actual.push_back(*v);
            }
          }
          MetricRecord rec;
          rec.year = year;
          rec.month = month;
          rec.zone = s.label;
          rec.kind = kind;
          rec.lead_day = lead_day;
          rec.n_samples = pred.size();
          rec.m_norm = s.m_norm;
          rec.nmbe = nmbe(pred, actual, s.m_norm);
          rec.nrmse = nrmse(pred, actual, s.m_norm);
          return rec;
        };
        for (int lead_day = 1; lead_day <= kHorizonDays; ++lead_day)
          result.records.push_back(pool(lead_day));
        result.records.push_back(pool(0));
      }

      if (first_month) {
        // Keep the first run of the most productive zone for the report.
        std::size_t best = 0;
        double best_energy = -1.0;
        for (std::size_t zi = 0; zi < cfg.zones.size(); ++zi) {
          KahanSum energy;
          for (const HourlyPoint& p : training[zi].clean_power.points)
            if (!p.missing) energy.add(p.value);
          if (energy.value() > best_energy) {
            best_energy = energy.value();
            best = zi;
          }
        }
        RunComparison sample;
        sample.run = runs[best][0];
        sample.actual.resize(kHorizonHours,
                             std::numeric_limits<double>::quiet_NaN());
        for (int h = 1; h <= kHorizonHours; ++h) {
          const auto v = zone_measured[best]->value_at(sample.run.time_of(h));
          if (v) sample.actual[std::size_t(h - 1)] = *v;
        }
        result.samples.push_back(std::move(sample));
      }
    }
  }
  return result;
}

}  // namespace zonecast::eval
