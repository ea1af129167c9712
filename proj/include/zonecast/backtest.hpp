#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "zonecast/ingest.hpp"
#include "zonecast/knn.hpp"
#include "zonecast/pipeline.hpp"
#include "zonecast/preprocess.hpp"
#include "zonecast/qrf.hpp"
#include "zonecast/types.hpp"

namespace zonecast::eval {

/// Semi-moving-window protocol: training always starts at train_start and
/// ends the day before each test month; models are refit once per month.
struct BacktestConfig {
  HourlyTimestamp train_start = HourlyTimestamp::from_ymdh(2015, 5, 1, 0);
  std::vector<std::pair<int, int>> test_months;  // (year, month)
  std::vector<ZoneId> zones;
  std::vector<PlantKind> kinds;
  preprocess::PreprocessConfig preprocess;
  knn::KnnParams knn;  // calendar windows apply to PV only
  qrf::QrfParams qrf;
  pipeline::RunParams run;
  int threads = 1;
};

/// One pooled score. zone is a bidding-zone acronym or "ITALY" (zonal
/// series summed before scoring); lead_day 0 pools all 15 days.
struct MetricRecord {
  int year = 0;
  int month = 0;
  std::string zone;
  PlantKind kind = PlantKind::PV;
  int lead_day = 0;
  double nmbe = 0.0;
  double nrmse = 0.0;
  std::size_t n_samples = 0;
  double m_norm = 0.0;
};

struct BacktestInputs {
  ingest::PowerSeriesMap power;  // measured, covering training + test + 15 days
  ingest::MetSeriesMap met;      // measured province series
  std::vector<ingest::MonthlyNationalTotal> totals;
  std::map<ZoneId, std::vector<int>> zone_provinces;
  /// Met forecast (lead hours 1..H) for a run date.
  std::function<ingest::MetSeriesMap(HourlyTimestamp run_date)> forecast_loader;
};

/// Forecast-vs-metering trace of one run, kept for reporting.
struct RunComparison {
  ForecastRun run;
  std::vector<double> actual;  // aligned to lead hours; NaN where unmeasured
};

struct BacktestResult {
  std::vector<MetricRecord> records;
  std::vector<RunComparison> samples;  // first run of the first month, most
                                       // productive zone, one per kind
};

BacktestResult backtest(const BacktestInputs& inputs, const BacktestConfig& cfg);

/// Stamps in [begin, end).
HourlySeries slice_series(const HourlySeries& s, HourlyTimestamp begin,
                          HourlyTimestamp end);

struct TrainedZone {
  HourlySeries clean_power;  // rescaled + gap-filled training slice
  knn::KnnModel knn_model;
  qrf::QrfModel qrf_model;
};

/// Fits both learners for one zone on [cfg.train_start, train_end):
/// monthly rescale over every zone of the kind, spline gap fill, PV
/// safety-cone outlier drop, then per-learner feature assembly.
TrainedZone train_zone(const BacktestInputs& inputs, const BacktestConfig& cfg,
                       PlantKind kind, ZoneId zone, HourlyTimestamp train_end);

/// Measured (GHI, power) rows over the n weeks before run_date, the
/// training tail consumed by the PV post-processing.
SampleMatrix pv_tail_matrix(const BacktestInputs& inputs, ZoneId zone,
                            HourlyTimestamp run_date, int n_weeks);

}  // namespace zonecast::eval
