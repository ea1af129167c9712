#include "zonecast/qrf.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>

#include "zonecast/io_util.hpp"
#include "zonecast/parallel.hpp"
#include "zonecast/rng.hpp"

namespace zonecast::qrf {

namespace {

struct TreeBuilder {
  const SampleMatrix& data;
  const QrfParams& params;
  int mtry;
  std::mt19937_64 rng;
  QrfTree tree;

  // Scratch, reused across nodes.
  std::vector<std::uint32_t> feature_pool;
  std::vector<std::pair<double, std::uint32_t>> sorted;  // (x value, position)

  TreeBuilder(const SampleMatrix& d, const QrfParams& p, int mtry_,
              std::uint64_t seed)
      : data(d), params(p), mtry(mtry_), rng(seed) {
    feature_pool.resize(d.width());
  }

  bool pure(const std::vector<std::uint32_t>& samples) const {
    const double first = data.targets[samples.front()];
    for (const std::uint32_t id : samples)
      if (data.targets[id] != first) return false;
    return true;
  }

  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double cost = std::numeric_limits<double>::infinity();
  };

  // Best variance-reduction split over mtry randomly chosen features.
  // Candidate thresholds are midpoints between consecutive distinct
  // values; children must keep at least min_leaf samples each.
  Split find_split(const std::vector<std::uint32_t>& samples) {
    const std::size_t w = data.width();
    const std::size_t m = samples.size();
    for (std::size_t f = 0; f < w; ++f) feature_pool[f] = std::uint32_t(f);
    for (int j = 0; j < mtry; ++j) {
      const std::size_t pick = std::size_t(j) + bounded(rng, w - std::size_t(j));
      std::swap(feature_pool[std::size_t(j)], feature_pool[pick]);
    }

    Split best;
    for (int j = 0; j < mtry; ++j) {
      const std::uint32_t f = feature_pool[std::size_t(j)];
      sorted.clear();
      for (std::uint32_t pos = 0; pos < m; ++pos)
        sorted.emplace_back(data.features[samples[pos] * w + f], pos);
      std::sort(sorted.begin(), sorted.end());

      double sum_left = 0.0, sq_left = 0.0;
      double sum_all = 0.0, sq_all = 0.0;
      for (const auto& [x, pos] : sorted) {
        const double y = data.targets[samples[pos]];
        sum_all += y;
        sq_all += y * y;
      }
      for (std::size_t i = 0; i + 1 < m; ++i) {
        const double y = data.targets[samples[sorted[i].second]];
        sum_left += y;
        sq_left += y * y;
        const std::size_t n_left = i + 1;
        const std::size_t n_right = m - n_left;
        if (sorted[i].first == sorted[i + 1].first) continue;
        if (n_left < std::size_t(params.min_leaf) ||
            n_right < std::size_t(params.min_leaf))
          continue;
        const double sum_right = sum_all - sum_left;
        const double sq_right = sq_all - sq_left;
        const double cost =
            (sq_left - sum_left * sum_left / double(n_left)) +
            (sq_right - sum_right * sum_right / double(n_right));
        if (cost < best.cost) {
          best.cost = cost;
          best.feature = int(f);
          best.threshold = 0.5 * (sorted[i].first + sorted[i + 1].first);
        }
      }
    }
    return best;
  }

  std::int32_t grow(std::vector<std::uint32_t> samples, int depth) {
    const std::int32_t index = std::int32_t(tree.nodes.size());
    tree.nodes.emplace_back();

    const bool depth_capped = params.max_depth > 0 && depth >= params.max_depth;
    if (samples.size() < 2 * std::size_t(params.min_leaf) || depth_capped ||
        pure(samples)) {
      tree.nodes[index].samples = std::move(samples);
      return index;
    }

    const Split split = find_split(samples);
    if (split.feature < 0) {
      tree.nodes[index].samples = std::move(samples);
      return index;
    }

    const std::size_t w = data.width();
    std::vector<std::uint32_t> left, right;
    for (const std::uint32_t id : samples) {
      if (data.features[id * w + std::size_t(split.feature)] <= split.threshold)
        left.push_back(id);
      else
        right.push_back(id);
    }
    samples.clear();
    samples.shrink_to_fit();

    tree.nodes[index].feature = split.feature;
    tree.nodes[index].threshold = split.threshold;
    const std::int32_t l = grow(std::move(left), depth + 1);
    tree.nodes[index].left = l;
    const std::int32_t r = grow(std::move(right), depth + 1);
    tree.nodes[index].right = r;
    return index;
  }
};

QrfTree build_tree(const SampleMatrix& data, const QrfParams& params, int mtry,
                   std::uint64_t tree_seed) {
  TreeBuilder builder(data, params, mtry, tree_seed);
  const std::size_t n = data.rows();
  std::vector<std::uint32_t> bootstrap(n);
  for (std::size_t i = 0; i < n; ++i)
    bootstrap[i] = std::uint32_t(bounded(builder.rng, n));
  builder.grow(std::move(bootstrap), 0);
  return std::move(builder.tree);
}

}  // namespace

const QrfNode& QrfTree::leaf_for(std::span<const double> x) const {
  std::int32_t i = 0;
  while (nodes[std::size_t(i)].feature >= 0) {
    const QrfNode& node = nodes[std::size_t(i)];
    i = x[std::size_t(node.feature)] <= node.threshold ? node.left : node.right;
  }
  return nodes[std::size_t(i)];
}

QrfModel fit_qrf(const SampleMatrix& data, const QrfParams& params,
                 int threads) {
  if (params.n_trees < 1) throw std::invalid_argument("fit_qrf: n_trees < 1");
  if (params.min_leaf < 1) throw std::invalid_argument("fit_qrf: min_leaf < 1");
  if (!(params.quantile > 0.0 && params.quantile < 1.0))
    throw std::invalid_argument("fit_qrf: quantile outside (0,1)");
  const std::size_t n = data.rows();
  const std::size_t w = data.width();
  if (w == 0) throw std::invalid_argument("fit_qrf: zero feature width");
  if (n < 2 * std::size_t(params.min_leaf))
    throw std::runtime_error("fit_qrf: " + std::to_string(n) +
                             " rows < 2*min_leaf");
  int mtry = params.mtry;
  if (mtry == 0) mtry = int((w + 2) / 3);  // ceil(width / 3)
  if (mtry < 1 || std::size_t(mtry) > w)
    throw std::invalid_argument("fit_qrf: mtry out of range");

  QrfModel model;
  model.width = w;
  model.targets = data.targets;
  model.params = params;
  model.params.mtry = mtry;
  model.trees.resize(std::size_t(params.n_trees));
  parallel_for(std::size_t(params.n_trees), threads, [&](std::size_t t) {
    model.trees[t] = build_tree(data, params, mtry, derive_seed(params.seed, t));
  });
  return model;
}

namespace {

// Accumulates leaf weights in tree order and id order; both the dense and
// the workspace paths run these exact operations so their floating-point
// results match bit for bit.
void accumulate_weights(const QrfModel& model, std::span<const double> x,
                        std::vector<double>& weight,
                        std::vector<std::uint32_t>* touched) {
  for (const QrfTree& tree : model.trees) {
    const QrfNode& leaf = tree.leaf_for(x);
    const double share = 1.0 / double(leaf.samples.size());
    for (const std::uint32_t id : leaf.samples) {
      if (touched && weight[id] == 0.0) touched->push_back(id);
      weight[id] += share;
    }
  }
}

}  // namespace

std::vector<double> qrf_weights(const QrfModel& model,
                                std::span<const double> x) {
  if (x.size() != model.width)
    throw std::invalid_argument("qrf_weights: feature width mismatch");
  if (model.trees.empty()) throw std::runtime_error("qrf_weights: empty model");

  std::vector<double> weight(model.targets.size(), 0.0);
  accumulate_weights(model, x, weight, nullptr);
  const double inv_trees = 1.0 / double(model.trees.size());
  for (double& v : weight) v *= inv_trees;
  double total = 0.0;
  for (const double v : weight) total += v;
  for (double& v : weight) v /= total;
  return weight;
}

double qrf_quantile(const QrfModel& model, std::span<const double> x,
                    double alpha, QrfWorkspace& ws) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("qrf_quantile: alpha outside (0,1)");
  if (x.size() != model.width)
    throw std::invalid_argument("qrf_quantile: feature width mismatch");
  if (model.trees.empty()) throw std::runtime_error("qrf_quantile: empty model");

  ws.weight.resize(model.targets.size());
  for (const std::uint32_t id : ws.touched) ws.weight[id] = 0.0;
  ws.touched.clear();
  accumulate_weights(model, x, ws.weight, &ws.touched);

  // Same arithmetic as qrf_weights: average over trees, normalize with an
  // id-ascending total (zeros add nothing, so skipping them is exact).
  std::sort(ws.touched.begin(), ws.touched.end());
  const double inv_trees = 1.0 / double(model.trees.size());
  double total = 0.0;
  for (const std::uint32_t id : ws.touched) {
    ws.weight[id] *= inv_trees;
    total += ws.weight[id];
  }

  ws.order.clear();
  for (const std::uint32_t id : ws.touched)
    ws.order.emplace_back(model.targets[id], id);
  std::sort(ws.order.begin(), ws.order.end());

  double cumulative = 0.0;
  for (const auto& [y, id] : ws.order) {
    cumulative += ws.weight[id] / total;
    if (cumulative >= alpha) return y;
  }
  return ws.order.back().first;  // rounding left the last step short of 1
}

double qrf_quantile(const QrfModel& model, std::span<const double> x,
                    double alpha) {
  QrfWorkspace ws;
  return qrf_quantile(model, x, alpha, ws);
}

double qrf_mean(const QrfModel& model, std::span<const double> x) {
  const std::vector<double> weight = qrf_weights(model, x);
  double mean = 0.0;
  for (std::size_t i = 0; i < weight.size(); ++i)
    mean += weight[i] * model.targets[i];
  return mean;
}

void save_qrf(const QrfModel& model, std::ostream& out) {
  out << "zonecast-qrf 1\n";
  out << model.width << ' ' << model.trees.size() << ' ' << model.params.min_leaf
      << ' ' << model.params.mtry << ' ' << model.params.max_depth << ' '
      << model.params.seed << ' ' << format_double(model.params.quantile)
      << '\n';
  out << model.targets.size() << '\n';
  for (std::size_t i = 0; i < model.targets.size(); ++i)
    out << (i ? " " : "") << format_double(model.targets[i]);
  out << '\n';
  for (const QrfTree& tree : model.trees) {
    out << tree.nodes.size() << '\n';
    for (const QrfNode& node : tree.nodes) {
      if (node.feature >= 0) {
        out << "s " << node.feature << ' ' << format_double(node.threshold)
            << ' ' << node.left << ' ' << node.right << '\n';
      } else {
        out << "l " << node.samples.size();
        for (const std::uint32_t id : node.samples) out << ' ' << id;
        out << '\n';
      }
    }
  }
}

QrfModel load_qrf(std::istream& in) {
  std::string magic, version;
  in >> magic >> version;
  if (magic != "zonecast-qrf" || version != "1")
    throw std::runtime_error("load_qrf: not a zonecast-qrf v1 stream");
  QrfModel model;
  std::size_t n_trees = 0;
  in >> model.width >> n_trees >> model.params.min_leaf >> model.params.mtry >>
      model.params.max_depth >> model.params.seed >> model.params.quantile;
  model.params.n_trees = int(n_trees);
  std::size_t n_targets = 0;
  in >> n_targets;
  model.targets.resize(n_targets);
  for (double& y : model.targets) in >> y;
  if (!in) throw std::runtime_error("load_qrf: truncated targets");
  model.trees.resize(n_trees);
  for (QrfTree& tree : model.trees) {
    std::size_t n_nodes = 0;
    in >> n_nodes;
    tree.nodes.resize(n_nodes);
    for (QrfNode& node : tree.nodes) {
      std::string tag;
      in >> tag;
      if (tag == "s") {
        in >> node.feature >> node.threshold >> node.left >> node.right;
      } else if (tag == "l") {
        std::size_t count = 0;
        in >> count;
        node.samples.resize(count);
        for (std::uint32_t& id : node.samples) in >> id;
      } else {
        throw std::runtime_error("load_qrf: unknown node tag '" + tag + "'");
      }
    }
  }
  if (!in) throw std::runtime_error("load_qrf: truncated trees");
  return model;
}

}  // namespace zonecast::qrf
