#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "zonecast/types.hpp"

namespace zonecast::qrf {

struct QrfParams {
  int n_trees = 200;
  int min_leaf = 5;
  int mtry = 0;       // features tried per split; 0 = ceil(width / 3)
  int max_depth = 0;  // 0 = unlimited
  std::uint64_t seed = 0;
  double quantile = 0.5;  // level q of the point forecast
};

/// One tree node. Internal nodes route on feature/threshold; leaves keep
/// the bootstrap sample ids (with multiplicity) that reached them.
struct QrfNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::vector<std::uint32_t> samples;
};

struct QrfTree {
  std::vector<QrfNode> nodes;  // node 0 is the root

  const QrfNode& leaf_for(std::span<const double> x) const;
};

/// Forest over one training set; trees keep every leaf member so the
/// conditional distribution, not just its mean, can be read off.
struct QrfModel {
  std::size_t width = 0;
  std::vector<QrfTree> trees;
  std::vector<double> targets;  // training targets by sample id
  QrfParams params;
};

/// Grows n_trees CART regression trees on bootstrap resamples. Tree t
/// draws from a generator seeded by (seed, t), so parallel and serial
/// fits are identical. Splits minimize the summed child target variance
/// over mtry randomly chosen features.
QrfModel fit_qrf(const SampleMatrix& data, const QrfParams& params,
                 int threads = 1);

/// Meinshausen weights over training samples: per tree each leaf member
/// gets 1/leaf_size, averaged over trees, then normalized to sum 1.
std::vector<double> qrf_weights(const QrfModel& model, std::span<const double> x);

/// Reusable scratch space for the hot prediction path.
struct QrfWorkspace {
  std::vector<double> weight;
  std::vector<std::uint32_t> touched;
  std::vector<std::pair<double, std::uint32_t>> order;
};

/// Empirical conditional quantile: smallest training target whose
/// weighted CDF reaches alpha. Targets are walked in (value, sample id)
/// order so results are reproducible.
double qrf_quantile(const QrfModel& model, std::span<const double> x,
                    double alpha);
double qrf_quantile(const QrfModel& model, std::span<const double> x,
                    double alpha, QrfWorkspace& ws);

/// Weighted conditional mean, for comparison against the quantile output.
double qrf_mean(const QrfModel& model, std::span<const double> x);

/// Versioned text round-trip; doubles are written in shortest exact form.
void save_qrf(const QrfModel& model, std::ostream& out);
QrfModel load_qrf(std::istream& in);

}  // namespace zonecast::qrf
