#pragma once

#include <optional>
#include <vector>

#include "zonecast/ingest.hpp"
#include "zonecast/knn.hpp"
#include "zonecast/qrf.hpp"
#include "zonecast/types.hpp"

namespace zonecast::pipeline {

enum class Learner : std::uint8_t { KNN, QRF };

/// Which derived predictors a (kind, learner) pair consumes:
///   PV/KNN  -> zone-mean GHI, GHI_CS
///   PV/QRF  -> zone-mean GHI, GHI_CS plus circular month/hour encodings
///   WD/KNN  -> zone-mean wind speed magnitude
///   WD/QRF  -> zone-mean UGRD, VGRD
struct FeatureSpec {
  PlantKind kind = PlantKind::PV;
  Learner learner = Learner::KNN;
};

/// Timestamped feature rows for one zone; zone-level met values are the
/// mean over the zone's provinces.
struct FeatureBlock {
  std::vector<std::string> names;
  std::vector<HourlyTimestamp> timestamps;
  std::vector<double> values;  // row-major

  std::size_t width() const { return names.size(); }
  std::size_t rows() const { return timestamps.size(); }
  std::span<const double> row(std::size_t i) const {
    return {values.data() + i * width(), width()};
  }
};

/// Builds per-hour feature vectors for the timestamps where every needed
/// (province, variable) series has a value. Wind speed is computed per
/// province, then averaged. Throws when a needed series is absent.
FeatureBlock build_features(const ingest::MetSeriesMap& met,
                            const std::vector<int>& zone_provinces,
                            FeatureSpec spec);

/// Inner-joins a feature block with measured power into a training matrix.
SampleMatrix to_samples(const FeatureBlock& block, const HourlySeries& power,
                        ZoneId zone, PlantKind kind);

struct ExtendedSeries {
  HourlySeries series;                    // lead hours 1..360
  std::vector<std::uint8_t> persistence;  // flag per lead hour
};

/// Extends an NWP series covering whole days 1..H/24 to the full 360-hour
/// horizon by tiling its final day forward. H must be a positive multiple
/// of 24; hours beyond H are flagged.
ExtendedSeries persistence_extend(const HourlySeries& met_forecast,
                                  HourlyTimestamp run_date);

struct EnsembleParams {
  double weight_knn = 0.5;  // weight_qrf = 1 - weight_knn
};

/// Convex combination of the two learners' point forecasts.
double ensemble_combine(double knn_pred, double qrf_pred,
                        const EnsembleParams& params);

struct PostprocessParams {
  int n_weeks = 2;
  bool enabled = true;
  double ghi_floor = 20.0;  // daily-peak days below this are skipped
};

struct PostprocessResult {
  ForecastRun run;
  bool applied = false;
  double k_prod = 1.0;
};

/// Seasonal-drift correction for PV: K_prod = Q_train / Q_for where both
/// Q are mean power-to-irradiance ratios at the daily GHI-peak hours --
/// Q_for over the 15 forecast days, Q_train over the measured tail of the
/// n weeks just before the run date. When either ratio is undefined the
/// forecast is returned unscaled with applied=false.
PostprocessResult pv_postprocess(const ForecastRun& forecast,
                                 const HourlySeries& ghi_forecast,
                                 const SampleMatrix& training_tail,
                                 const PostprocessParams& params);

enum class PostprocessOrder : std::uint8_t { BeforeCombine, AfterCombine };

struct RunParams {
  EnsembleParams ensemble;
  PostprocessParams postprocess;  // consulted for PV only
  PostprocessOrder order = PostprocessOrder::BeforeCombine;
};

/// Full composition: persistence-extend the met forecast, build per-hour
/// features, predict with both learners, post-process (PV), and combine.
/// `pv_tail` supplies the measured (GHI, power) tail for K_prod; pass
/// nullptr to skip post-processing. Stage failures are rethrown with the
/// stage name prefixed.
ForecastRun run_forecast(const knn::KnnModel& knn_model,
                         const qrf::QrfModel& qrf_model,
                         const ingest::MetSeriesMap& met_forecast,
                         const std::vector<int>& zone_provinces,
                         HourlyTimestamp run_date, ZoneId zone, PlantKind kind,
                         const RunParams& params,
                         const SampleMatrix* pv_tail = nullptr);

}  // namespace zonecast::pipeline
