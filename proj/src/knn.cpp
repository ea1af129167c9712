#include "zonecast/knn.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "zonecast/io_util.hpp"

namespace zonecast::knn {

KnnModel fit_knn(const SampleMatrix& data, const KnnParams& params) {
  if (params.k < 1) throw std::invalid_argument("fit_knn: k < 1");
  if (!(params.epsilon > 0.0)) throw std::invalid_argument("fit_knn: epsilon <= 0");
  if (params.month_window.has_value() != params.hour_window.has_value())
    throw std::invalid_argument("fit_knn: month/hour windows must come together");
  const std::size_t n = data.rows();
  const std::size_t w = data.width();
  if (n < std::size_t(params.k))
    throw std::runtime_error("fit_knn: " + std::to_string(n) +
                             " rows < k = " + std::to_string(params.k));

  KnnModel model;
  model.width = w;
  model.params = params;
  model.means.assign(w, 0.0);
  model.stds.assign(w, 1.0);
  model.inert_feature.assign(w, 0);

  for (std::size_t f = 0; f < w; ++f) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += data.features[i * w + f];
    model.means[f] = sum / double(n);
    double sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = data.features[i * w + f] - model.means[f];
      sq += d * d;
    }
    const double variance = sq / double(n);
    if (variance > 0.0) {
      model.stds[f] = std::sqrt(variance);
    } else {
      model.stds[f] = 1.0;  // inert column: contributes 0 to every distance
      model.inert_feature[f] = 1;
    }
  }

  model.features.resize(n * w);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < w; ++f) {
      model.features[i * w + f] =
          (data.features[i * w + f] - model.means[f]) / model.stds[f];
    }
  }
  model.targets = data.targets;
  model.months.resize(n);
  model.hours.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    model.months[i] = std::uint8_t(data.timestamps[i].month());
    model.hours[i] = std::uint8_t(data.timestamps[i].hour());
  }
  return model;
}

KnnPrediction knn_predict(const KnnModel& model, std::span<const double> x,
                          int month, int hour) {
  if (model.rows() == 0) throw std::runtime_error("knn_predict: empty model");
  if (x.size() != model.width)
    throw std::invalid_argument("knn_predict: feature width mismatch");
  if (month < 1 || month > 12) throw std::invalid_argument("knn_predict: month");
  if (hour < 0 || hour > 23) throw std::invalid_argument("knn_predict: hour");

  const std::size_t n = model.rows();
  const std::size_t w = model.width;
  const std::size_t k = std::size_t(model.params.k);

  std::vector<double> q(w);
  for (std::size_t f = 0; f < w; ++f)
    q[f] = (x[f] - model.means[f]) / model.stds[f];

  // Candidate rows under the calendar window, widening until k are found.
  std::vector<std::uint32_t> candidates;
  bool widened = false;
  if (model.params.month_window) {
    int dm = *model.params.month_window;
    int dh = *model.params.hour_window;
    auto collect = [&] {
      candidates.clear();
      for (std::size_t i = 0; i < n; ++i) {
        if (circular_distance(model.months[i], month, 12) <= dm &&
            circular_distance(model.hours[i], hour, 24) <= dh)
          candidates.push_back(std::uint32_t(i));
      }
    };
    collect();
    while (candidates.size() < k && (dm < 6 || dh < 12)) {
      if (dm < 6) {
        ++dm;
        widened = true;
        collect();
        if (candidates.size() >= k) break;
      }
      if (dh < 12) {
        ++dh;
        widened = true;
        collect();
      }
    }
    if (candidates.size() < k)
      throw std::runtime_error("knn_predict: fewer candidates than k");
  } else {
    candidates.resize(n);
    for (std::size_t i = 0; i < n; ++i) candidates[i] = std::uint32_t(i);
  }

  std::vector<std::pair<double, std::uint32_t>> dist;
  dist.reserve(candidates.size());
  for (const std::uint32_t i : candidates) {
    double sq = 0.0;
    const double* row = model.features.data() + std::size_t(i) * w;
    for (std::size_t f = 0; f < w; ++f) {
      const double d = q[f] - row[f];
      sq += d * d;
    }
    dist.emplace_back(std::sqrt(sq), i);
  }
  if (dist.size() > k) {
    std::nth_element(dist.begin(), dist.begin() + long(k) - 1, dist.end());
    dist.resize(k);
  }
  std::sort(dist.begin(), dist.end());  // (distance, row index) order

  double num = 0.0, den = 0.0;
  for (const auto& [d, i] : dist) {
    const double weight = 1.0 / (d + model.params.epsilon);
    num += weight * model.targets[i];
    den += weight;
  }
  KnnPrediction pred;
  pred.value = std::max(0.0, num / den);
  pred.widened_window = widened;
  return pred;
}

void save_knn(const KnnModel& model, std::ostream& out) {
  out << "zonecast-knn 1\n";
  out << model.width << ' ' << model.rows() << ' ' << model.params.k << ' '
      << format_double(model.params.epsilon) << ' '
      << (model.params.month_window ? *model.params.month_window : -1) << ' '
      << (model.params.hour_window ? *model.params.hour_window : -1) << '\n';
  auto vec = [&out](const std::vector<double>& v) {
    for (std::size_t i = 0; i < v.size(); ++i)
      out << (i ? " " : "") << format_double(v[i]);
    out << '\n';
  };
  vec(model.means);
  vec(model.stds);
  vec(model.targets);
  vec(model.features);
  for (std::size_t i = 0; i < model.rows(); ++i)
    out << (i ? " " : "") << int(model.months[i]);
  out << '\n';
  for (std::size_t i = 0; i < model.rows(); ++i)
    out << (i ? " " : "") << int(model.hours[i]);
  out << '\n';
  for (std::size_t f = 0; f < model.width; ++f)
    out << (f ? " " : "") << int(model.inert_feature[f]);
  out << '\n';
}

KnnModel load_knn(std::istream& in) {
  std::string magic, version;
  in >> magic >> version;
  if (magic != "zonecast-knn" || version != "1")
    throw std::runtime_error("load_knn: not a zonecast-knn v1 stream");
  KnnModel model;
  std::size_t rows = 0;
  int mw = -1, hw = -1;
  in >> model.width >> rows >> model.params.k >> model.params.epsilon >> mw >> hw;
  if (!in) throw std::runtime_error("load_knn: truncated header");
  if (mw >= 0) model.params.month_window = mw;
  if (hw >= 0) model.params.hour_window = hw;
  auto vec = [&in](std::vector<double>& v, std::size_t count) {
    v.resize(count);
    for (double& x : v) in >> x;
  };
  vec(model.means, model.width);
  vec(model.stds, model.width);
  vec(model.targets, rows);
  vec(model.features, rows * model.width);
  model.months.resize(rows);
  model.hours.resize(rows);
  for (auto& m : model.months) {
    int v = 0;
    in >> v;
    m = std::uint8_t(v);
  }
  for (auto& h : model.hours) {
    int v = 0;
    in >> v;
    h = std::uint8_t(v);
  }
  model.inert_feature.resize(model.width);
  for (auto& f : model.inert_feature) {
    int v = 0;
    in >> v;
    f = std::uint8_t(v);
  }
  if (!in) throw std::runtime_error("load_knn: truncated body");
  return model;
}

}  // namespace zonecast::knn
