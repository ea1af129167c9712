#pragma once

#include "zonecast/backtest.hpp"

namespace zonecast::eval {

/// Grid over the four tunable hyperparameters: cone threshold, quantile
/// level, neighbour count, and post-processing weeks.
struct TuneGrid {
  std::vector<double> cone_thresholds = {3.0, 5.0, 8.0};
  std::vector<double> quantiles = {0.4, 0.5, 0.6};
  std::vector<int> ks = {5, 10, 20};
  std::vector<int> n_weeks = {1, 2, 4};
  int holdout_days = 28;
};

struct TuneEntry {
  double cone_threshold = 0.0;
  double quantile = 0.0;
  int k = 0;
  int n_weeks = 0;
  double nrmse = 0.0;
  std::size_t n_samples = 0;
};

/// Sweeps the grid on the training data alone: the final holdout_days
/// before `train_limit` are held out, models are fit on the head, and each
/// holdout day is forecast with measured met as input. Entries come back
/// ranked by ascending NRMSE (normalized by the holdout maximum power).
std::vector<TuneEntry> tune(const BacktestInputs& inputs,
                            const BacktestConfig& base, const TuneGrid& grid,
                            PlantKind kind, ZoneId zone,
                            HourlyTimestamp train_limit);

}  // namespace zonecast::eval
