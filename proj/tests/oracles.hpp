// Independent reference implementations used to attack the learners.
// They share nothing with the production code paths beyond the public
// model structs: routing, candidate selection, sorting and the CDF walk
// are all re-derived here from the definitions.
#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "zonecast/knn.hpp"
#include "zonecast/qrf.hpp"
#include "zonecast/rng.hpp"
#include "zonecast/types.hpp"

namespace zonecast::testing {

// Exhaustive k-NN: standardize, window (with the same month-first
// widening), compute every distance, full stable sort, hyperbolic weights.
inline double knn_oracle(const knn::KnnModel& model, std::span<const double> x,
                         int month, int hour) {
  const std::size_t n = model.rows();
  const std::size_t w = model.width;
  std::vector<double> q(w);
  for (std::size_t f = 0; f < w; ++f)
    q[f] = (x[f] - model.means[f]) / model.stds[f];

  std::vector<std::size_t> candidates;
  if (model.params.month_window) {
    int dm = *model.params.month_window;
    int dh = *model.params.hour_window;
    auto collect = [&] {
      candidates.clear();
      for (std::size_t i = 0; i < n; ++i) {
        if (circular_distance(model.months[i], month, 12) <= dm &&
            circular_distance(model.hours[i], hour, 24) <= dh)
          candidates.push_back(i);
      }
    };
    collect();
    while (candidates.size() < std::size_t(model.params.k) && (dm < 6 || dh < 12)) {
      if (dm < 6) {
        ++dm;
        collect();
        if (candidates.size() >= std::size_t(model.params.k)) break;
      }
      if (dh < 12) {
        ++dh;
        collect();
      }
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) candidates.push_back(i);
  }

  std::vector<std::pair<double, std::size_t>> all;
  for (const std::size_t i : candidates) {
    double sq = 0.0;
    for (std::size_t f = 0; f < w; ++f) {
      const double d = q[f] - model.features[i * w + f];
      sq += d * d;
    }
    all.emplace_back(std::sqrt(sq), i);
  }
  std::stable_sort(all.begin(), all.end());

  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < std::size_t(model.params.k); ++j) {
    const double weight = 1.0 / (all[j].first + model.params.epsilon);
    num += weight * model.targets[all[j].second];
    den += weight;
  }
  return std::max(0.0, num / den);
}

// Walks one tree by hand.
inline const qrf::QrfNode& qrf_oracle_leaf(const qrf::QrfTree& tree,
                                           std::span<const double> x) {
  std::size_t i = 0;
  while (true) {
    const qrf::QrfNode& node = tree.nodes[i];
    if (node.feature < 0) return node;
    i = std::size_t(x[std::size_t(node.feature)] <= node.threshold ? node.left
                                                                   : node.right);
  }
}

// Dense Meinshausen weights recomputed from the leaf lists.
inline std::vector<double> qrf_oracle_weights(const qrf::QrfModel& model,
                                              std::span<const double> x) {
  std::vector<double> weight(model.targets.size(), 0.0);
  for (const qrf::QrfTree& tree : model.trees) {
    const qrf::QrfNode& leaf = qrf_oracle_leaf(tree, x);
    for (const std::uint32_t id : leaf.samples)
      weight[id] += 1.0 / double(leaf.samples.size());
  }
  const double inv = 1.0 / double(model.trees.size());
  for (double& v : weight) v *= inv;
  double total = 0.0;
  for (const double v : weight) total += v;
  for (double& v : weight) v /= total;
  return weight;
}

// Empirical conditional quantile from the dense weights: walk the targets
// in (value, id) order until the cumulative weight reaches alpha.
inline double qrf_oracle_quantile(const qrf::QrfModel& model,
                                  std::span<const double> x, double alpha) {
  const std::vector<double> weight = qrf_oracle_weights(model, x);
  std::vector<std::pair<double, std::size_t>> order;
  for (std::size_t i = 0; i < weight.size(); ++i)
    if (weight[i] > 0.0) order.emplace_back(model.targets[i], i);
  std::sort(order.begin(), order.end());
  double cumulative = 0.0;
  for (const auto& [y, id] : order) {
    cumulative += weight[id];
    if (cumulative >= alpha) return y;
  }
  return order.back().first;
}

// Random aligned training matrix with calendar stamps covering the whole
// month/hour circle.
inline SampleMatrix random_matrix(std::mt19937_64& rng, std::size_t rows,
                                  std::size_t width, double target_scale = 100.0) {
  SampleMatrix m;
  for (std::size_t f = 0; f < width; ++f)
    m.feature_names.push_back("f" + std::to_string(f));
  std::vector<double> row(width);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t f = 0; f < width; ++f)
      row[f] = 10.0 * uniform01(rng) + double(f);
    const int year = 2015 + int(bounded(rng, 3));
    const int month = 1 + int(bounded(rng, 12));
    const int day = 1 + int(bounded(rng, 28));
    const int hour = int(bounded(rng, 24));
    m.push_row(HourlyTimestamp::from_ymdh(year, month, day, hour), row,
               target_scale * uniform01(rng));
  }
  return m;
}

}  // namespace zonecast::testing
