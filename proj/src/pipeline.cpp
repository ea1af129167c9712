#include "zonecast/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "zonecast/qrf.hpp"

namespace zonecast::pipeline {

namespace {

using ingest::MetVariable;

}  // namespace

FeatureBlock build_features(const ingest::MetSeriesMap& met,
                            const std::vector<int>& zone_provinces,
                            FeatureSpec spec) {
  if (zone_provinces.empty())
    throw std::invalid_argument("build_features: no provinces for zone");

  const std::vector<MetVariable> variables = ingest::variables_for(spec.kind);
  std::map<std::pair<int, MetVariable>, const HourlySeries*> sources;
  for (const int p : zone_provinces) {
    for (const MetVariable v : variables) {
      const auto it = met.find({p, v});
      if (it == met.end())
        throw std::invalid_argument("build_features: missing series for province " +
                                    std::to_string(p) + " variable " +
                                    ingest::to_string(v));
      sources[{p, v}] = &it->second;
    }
  }

  FeatureBlock block;
  const bool pv = spec.kind == PlantKind::PV;
  const bool qrf = spec.learner == Learner::QRF;
  if (pv) {
    block.names = {"GHI", "GHI_CS"};
    if (qrf)
      block.names.insert(block.names.end(),
                         {"month_sin", "month_cos", "hour_sin", "hour_cos"});
  } else {
    if (qrf)
      block.names = {"UGRD", "VGRD"};
    else
      block.names = {"wind_speed"};
  }

  // Iterate the first source's stamps; keep hours present in all sources.
  const HourlySeries& driver = *sources.begin()->second;
  const int n_prov = int(zone_provinces.size());
  std::vector<double> row(block.width());
  for (const HourlyPoint& p : driver.points) {
    if (p.missing) continue;
    const HourlyTimestamp ts = p.ts;
    bool complete = true;
    double mean_a = 0.0, mean_b = 0.0, mean_speed = 0.0;
    for (const int province : zone_provinces) {
      const auto a = sources[{province, variables[0]}]->value_at(ts);
      const auto b = sources[{province, variables[1]}]->value_at(ts);
      if (!a || !b) {
        complete = false;
        break;
      }
      mean_a += *a;
      mean_b += *b;
      if (!pv) mean_speed += std::hypot(*a, *b);
    }
    if (!complete) continue;
    mean_a /= n_prov;
    mean_b /= n_prov;
    mean_speed /= n_prov;

    if (pv) {
      row[0] = mean_a;  // GHI
      row[1] = mean_b;  // GHI_CS
      if (qrf) {
        const double month_angle = 2.0 * M_PI * ts.month() / 12.0;
        const double hour_angle = 2.0 * M_PI * ts.hour() / 24.0;
        row[2] = std::sin(month_angle);
        row[3] = std::cos(month_angle);
        row[4] = std::sin(hour_angle);
        row[5] = std::cos(hour_angle);
      }
    } else if (qrf) {
      row[0] = mean_a;  // UGRD
      row[1] = mean_b;  // VGRD
    } else {
      row[0] = mean_speed;
    }
    block.timestamps.push_back(ts);
    block.values.insert(block.values.end(), row.begin(), row.end());
  }
  return block;
}

SampleMatrix to_samples(const FeatureBlock& block, const HourlySeries& power,
                        ZoneId zone, PlantKind kind) {
  SampleMatrix out;
  out.zone = zone;
  out.kind = kind;
  out.feature_names = block.names;
  for (std::size_t i = 0; i < block.rows(); ++i) {
    const auto target = power.value_at(block.timestamps[i]);
    if (!target) continue;
    out.push_row(block.timestamps[i], block.row(i), *target);
  }
  return out;
}

ExtendedSeries persistence_extend(const HourlySeries& met_forecast,
                                  HourlyTimestamp run_date) {
  const std::size_t available = met_forecast.size();
  if (available < 24)
    throw std::runtime_error("persistence_extend: fewer than 24 forecast hours");
  if (available % 24 != 0)
    throw std::runtime_error("persistence_extend: horizon not whole days");
  for (std::size_t i = 0; i < available; ++i) {
    const HourlyPoint& p = met_forecast.points[i];
    if (p.missing || p.ts != run_date + std::int64_t(i + 1))
      throw std::runtime_error(
          "persistence_extend: forecast not contiguous from lead hour 1");
  }
  const int h_in = std::min<int>(int(available), kHorizonHours);

  ExtendedSeries out;
  out.series.points.reserve(kHorizonHours);
  out.persistence.assign(kHorizonHours, 0);
  for (int h = 1; h <= h_in; ++h)
    out.series.points.push_back(met_forecast.points[std::size_t(h - 1)]);
  for (int h = h_in + 1; h <= kHorizonHours; ++h) {
    // Tile the final available day forward.
    const int src = h_in - 24 + 1 + ((h - h_in - 1) % 24);
    HourlyPoint p = met_forecast.points[std::size_t(src - 1)];
    p.ts = run_date + h;
    out.series.points.push_back(p);
    out.persistence[std::size_t(h - 1)] = 1;
  }
  return out;
}

double ensemble_combine(double knn_pred, double qrf_pred,
                        const EnsembleParams& params) {
  if (!(params.weight_knn >= 0.0 && params.weight_knn <= 1.0))
    throw std::invalid_argument("ensemble_combine: weight outside [0,1]");
  if (!std::isfinite(knn_pred) || !std::isfinite(qrf_pred) || knn_pred < 0.0 ||
      qrf_pred < 0.0)
    throw std::invalid_argument("ensemble_combine: predictions must be finite, >= 0");
  return params.weight_knn * knn_pred + (1.0 - params.weight_knn) * qrf_pred;
}

PostprocessResult pv_postprocess(const ForecastRun& forecast,
                                 const HourlySeries& ghi_forecast,
                                 const SampleMatrix& training_tail,
                                 const PostprocessParams& params) {
  if (params.n_weeks < 1)
    throw std::invalid_argument("pv_postprocess: n_weeks < 1");
  if (int(forecast.values.size()) != kHorizonHours ||
      int(ghi_forecast.size()) != kHorizonHours)
    throw std::invalid_argument("pv_postprocess: expected full 360-hour inputs");

  const auto ghi_col_it = std::find(training_tail.feature_names.begin(),
                                    training_tail.feature_names.end(), "GHI");
  if (ghi_col_it == training_tail.feature_names.end())
    throw std::invalid_argument("pv_postprocess: tail has no GHI column");
  const std::size_t ghi_col =
      std::size_t(ghi_col_it - training_tail.feature_names.begin());

  const HourlyTimestamp window_start =
      forecast.run_date - std::int64_t(params.n_weeks) * 7 * 24;
  for (const HourlyTimestamp ts : training_tail.timestamps) {
    if (ts <= window_start || ts > forecast.run_date)
      throw std::invalid_argument(
          "pv_postprocess: tail sample outside the n-week window before the run");
  }

  PostprocessResult result;
  result.run = forecast;

  // Q_for: mean power/GHI ratio at each forecast day's GHI peak.
  double q_for_sum = 0.0;
  int q_for_days = 0;
  for (int d = 0; d < kHorizonDays; ++d) {
    int peak_hour = -1;
    double peak_ghi = -1.0;
    for (int h = d * 24 + 1; h <= (d + 1) * 24; ++h) {
      const HourlyPoint& p = ghi_forecast.points[std::size_t(h - 1)];
      if (!p.missing && p.value > peak_ghi) {
        peak_ghi = p.value;
        peak_hour = h;
      }
    }
    if (peak_hour < 0 || peak_ghi < params.ghi_floor) continue;
    q_for_sum += forecast.values[std::size_t(peak_hour - 1)] / peak_ghi;
    ++q_for_days;
  }

  // Q_train: same ratio over the measured tail, grouped by calendar day.
  std::map<std::int64_t, std::pair<double, double>> day_peaks;  // day -> (ghi, power)
  for (std::size_t i = 0; i < training_tail.rows(); ++i) {
    const double ghi = training_tail.row(i)[ghi_col];
    const std::int64_t day =
        training_tail.timestamps[i].start_of_day().epoch_hours();
    auto [it, inserted] = day_peaks.try_emplace(day, ghi, training_tail.targets[i]);
    if (!inserted && ghi > it->second.first)
      it->second = {ghi, training_tail.targets[i]};
  }
  double q_train_sum = 0.0;
  int q_train_days = 0;
  for (const auto& [day, peak] : day_peaks) {
    if (peak.first < params.ghi_floor) continue;
    q_train_sum += peak.second / peak.first;
    ++q_train_days;
  }

  if (q_for_days == 0 || q_train_days == 0 || q_for_sum == 0.0)
    return result;  // unscaled, applied stays false

  const double q_for = q_for_sum / q_for_days;
  const double q_train = q_train_sum / q_train_days;
  result.k_prod = q_train / q_for;
  result.applied = true;
  for (double& v : result.run.values) v *= result.k_prod;
  return result;
}

namespace {

[[noreturn]] void stage_fail(const char* stage, const std::exception& e) {
  throw std::runtime_error(std::string("run_forecast[") + stage + "]: " + e.what());
}

}  // namespace

ForecastRun run_forecast(const knn::KnnModel& knn_model,
                         const qrf::QrfModel& qrf_model,
                         const ingest::MetSeriesMap& met_forecast,
                         const std::vector<int>& zone_provinces,
                         HourlyTimestamp run_date, ZoneId zone, PlantKind kind,
                         const RunParams& params, const SampleMatrix* pv_tail) {
  // Stage 1: persistence-extend every needed met series to 360 hours.
  ingest::MetSeriesMap extended;
  std::vector<std::uint8_t> flags(kHorizonHours, 0);
  try {
    for (const int province : zone_provinces) {
      for (const ingest::MetVariable v : ingest::variables_for(kind)) {
        const auto it = met_forecast.find({province, v});
        if (it == met_forecast.end())
          throw std::runtime_error("missing forecast series for province " +
                                   std::to_string(province) + " variable " +
                                   ingest::to_string(v));
        ExtendedSeries ext = persistence_extend(it->second, run_date);
        for (int h = 0; h < kHorizonHours; ++h)
          flags[std::size_t(h)] |= ext.persistence[std::size_t(h)];
        extended[{province, v}] = std::move(ext.series);
      }
    }
  } catch (const std::exception& e) {
    stage_fail("persistence_extend", e);
  }

  // Stage 2: per-learner features for all 360 hours.
  FeatureBlock knn_block, qrf_block;
  try {
    knn_block = build_features(extended, zone_provinces, {kind, Learner::KNN});
    qrf_block = build_features(extended, zone_provinces, {kind, Learner::QRF});
    if (int(knn_block.rows()) != kHorizonHours ||
        int(qrf_block.rows()) != kHorizonHours)
      throw std::runtime_error("incomplete feature rows over the horizon");
  } catch (const std::exception& e) {
    stage_fail("build_features", e);
  }

  // Stage 3: hourly predictions from both learners.
  std::vector<double> knn_values(kHorizonHours), qrf_values(kHorizonHours);
  try {
    qrf::QrfWorkspace ws;
    for (int h = 0; h < kHorizonHours; ++h) {
      const HourlyTimestamp ts = knn_block.timestamps[std::size_t(h)];
      knn_values[std::size_t(h)] =
          knn_predict(knn_model, knn_block.row(std::size_t(h)), ts.month(),
                      ts.hour())
              .value;
      qrf_values[std::size_t(h)] =
          qrf_quantile(qrf_model, qrf_block.row(std::size_t(h)),
                       qrf_model.params.quantile, ws);
    }
  } catch (const std::exception& e) {
    stage_fail("predict", e);
  }

  auto make_run = [&](const std::vector<double>& values) {
    ForecastRun run;
    run.run_date = run_date;
    run.zone = zone;
    run.kind = kind;
    run.values = values;
    run.persistence_flag = flags;
    return run;
  };

  // Stage 4: PV post-processing and ensemble combination.
  try {
    const bool postprocess =
        kind == PlantKind::PV && params.postprocess.enabled && pv_tail != nullptr;
    HourlySeries zone_ghi;
    if (postprocess) {
      // GHI is the first KNN feature column for PV.
      for (int h = 0; h < kHorizonHours; ++h)
        zone_ghi.points.push_back({knn_block.timestamps[std::size_t(h)],
                                   knn_block.row(std::size_t(h))[0], false});
    }

    if (postprocess && params.order == PostprocessOrder::BeforeCombine) {
      const auto knn_pp = pv_postprocess(make_run(knn_values), zone_ghi,
                                         *pv_tail, params.postprocess);
      const auto qrf_pp = pv_postprocess(make_run(qrf_values), zone_ghi,
                                         *pv_tail, params.postprocess);
      ForecastRun run = make_run(knn_values);
      for (int h = 0; h < kHorizonHours; ++h)
        run.values[std::size_t(h)] = ensemble_combine(
            knn_pp.run.values[std::size_t(h)], qrf_pp.run.values[std::size_t(h)],
            params.ensemble);
      return run;
    }

    ForecastRun run = make_run(knn_values);
    for (int h = 0; h < kHorizonHours; ++h)
      run.values[std::size_t(h)] = ensemble_combine(
          knn_values[std::size_t(h)], qrf_values[std::size_t(h)], params.ensemble);
    if (postprocess)
      run = pv_postprocess(run, zone_ghi, *pv_tail, params.postprocess).run;
    return run;
  } catch (const std::exception& e) {
    stage_fail("postprocess_combine", e);
  }
}

}  // namespace zonecast::pipeline
