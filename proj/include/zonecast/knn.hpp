#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "zonecast/types.hpp"

namespace zonecast::knn {

struct KnnParams {
  int k = 10;
  double epsilon = 1e-6;  // hyperbolic kernel regularizer, w = 1/(d+eps)
  // Circular candidate windows; both set (PV) or both absent (WD).
  std::optional<int> month_window;
  std::optional<int> hour_window;
};

/// Memorized training set in standardized feature space plus the calendar
/// fields used for candidate windowing. Immutable after fit.
struct KnnModel {
  std::size_t width = 0;
  std::vector<double> features;  // standardized, row-major
  std::vector<double> means;
  std::vector<double> stds;               // constant columns get std 1
  std::vector<std::uint8_t> inert_feature;  // true where variance was zero
  std::vector<double> targets;            // MW
  std::vector<std::uint8_t> months;       // 1..12
  std::vector<std::uint8_t> hours;        // 0..23
  KnnParams params;

  std::size_t rows() const { return targets.size(); }
};

/// Standardizes each feature column to zero mean and unit variance with
/// the training statistics and stores everything verbatim. Throws when
/// the data has fewer than k rows.
KnnModel fit_knn(const SampleMatrix& data, const KnnParams& params);

struct KnnPrediction {
  double value = 0.0;          // MW, clipped at 0
  bool widened_window = false;  // candidate window had to grow to reach k
};

/// Kernel-weighted k-NN: Euclidean distance in standardized space,
/// hyperbolic weights 1/(d+eps), candidates restricted to rows with
/// month/hour circularly close to the query when windows are set. Windows
/// too narrow for k candidates are widened one step at a time, month
/// first, then hour.
KnnPrediction knn_predict(const KnnModel& model, std::span<const double> x,
                          int month, int hour);

void save_knn(const KnnModel& model, std::ostream& out);
KnnModel load_knn(std::istream& in);

}  // namespace zonecast::knn
