#include "zonecast/tune.hpp"

#include <algorithm>
#include <stdexcept>

#include "zonecast/metrics.hpp"

namespace zonecast::eval {

std::vector<TuneEntry> tune(const BacktestInputs& inputs,
                            const BacktestConfig& base, const TuneGrid& grid,
                            PlantKind kind, ZoneId zone,
                            HourlyTimestamp train_limit) {
  if (grid.cone_thresholds.empty() || grid.quantiles.empty() || grid.ks.empty() ||
      grid.n_weeks.empty())
    throw std::invalid_argument("tune: empty grid dimension");
  if (grid.holdout_days < 1)
    throw std::invalid_argument("tune: holdout_days < 1");

  const HourlyTimestamp holdout_end = train_limit.start_of_day();
  const HourlyTimestamp holdout_start =
      holdout_end - std::int64_t(grid.holdout_days) * 24;
  if (holdout_start <= base.train_start)
    throw std::invalid_argument("tune: holdout would swallow the training set");

  const HourlySeries& measured = inputs.power.at({zone, kind});
  double m_norm = 0.0;
  for (HourlyTimestamp ts = holdout_start + 1; ts <= holdout_end; ts = ts + 1) {
    const auto v = measured.value_at(ts);
    if (v && *v > m_norm) m_norm = *v;
  }
  if (!(m_norm > 0.0))
    throw std::runtime_error("tune: degenerate holdout power maximum");

  const std::vector<int>& provinces = inputs.zone_provinces.at(zone);
  const int max_k = *std::max_element(grid.ks.begin(), grid.ks.end());

  std::vector<TuneEntry> entries;
  for (const double cone : grid.cone_thresholds) {
    BacktestConfig cfg = base;
    cfg.preprocess.cone_threshold = cone;
    cfg.knn.k = max_k;  // validates every grid k against the row count
    const TrainedZone trained = train_zone(inputs, cfg, kind, zone, holdout_start);

    for (const double quantile : grid.quantiles) {
      qrf::QrfModel qrf_model = trained.qrf_model;
      qrf_model.params.quantile = quantile;
      for (const int k : grid.ks) {
        knn::KnnModel knn_model = trained.knn_model;
        knn_model.params.k = k;
        for (const int weeks : grid.n_weeks) {
          pipeline::RunParams run = base.run;
          run.postprocess.n_weeks = weeks;
          run.postprocess.enabled = kind == PlantKind::PV;

          std::vector<double> pred, actual;
          for (HourlyTimestamp day = holdout_start; day + 24 <= holdout_end;
               day = day + 24) {
            const std::int64_t available = holdout_end - day;
            const int horizon = int(std::min<std::int64_t>(
                kHorizonHours, available / 24 * 24));
            // Measured met doubles as a perfect-provenance forecast input.
            ingest::MetSeriesMap fmet;
            for (const int p : provinces) {
              for (const ingest::MetVariable v : ingest::variables_for(kind)) {
                fmet[{p, v}] = preprocess::spline_fill(
                    slice_series(inputs.met.at({p, v}), day + 1,
                                 day + horizon + 1),
                    base.preprocess.max_gap_hours,
                    !ingest::is_signed_variable(v));
              }
            }
            SampleMatrix tail;
            const SampleMatrix* tail_ptr = nullptr;
            if (kind == PlantKind::PV) {
              tail = pv_tail_matrix(inputs, zone, day, weeks);
              tail_ptr = &tail;
            }
            const ForecastRun forecast = pipeline::run_forecast(
                knn_model, qrf_model, fmet, provinces, day, zone, kind, run,
                tail_ptr);
            for (int h = 1; h <= horizon; ++h) {
              const auto v = measured.value_at(forecast.time_of(h));
              if (!v) continue;
              pred.push_back(forecast.values[std::size_t(h - 1)]);
              actual.push_back(*v);
            }
          }
          if (pred.empty())
            throw std::runtime_error("tune: holdout produced no scored hours");

          TuneEntry entry;
          entry.cone_threshold = cone;
          entry.quantile = quantile;
          entry.k = k;
          entry.n_weeks = weeks;
          entry.n_samples = pred.size();
          entry.nrmse = nrmse(pred, actual, m_norm);
          entries.push_back(entry);
        }
      }
    }
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const TuneEntry& a, const TuneEntry& b) {
                     return a.nrmse < b.nrmse;
                   });
  return entries;
}

}  // namespace zonecast::eval
