#include "gtn/kmeans.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "gtn/error.hpp"

namespace gtn {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
  return s;
}

PointSet plus_plus_seeds(Rng& rng, const PointSet& data, std::size_t k) {
  PointSet centers(0, data.dim());
  centers.append_row(data.row(rng.index(data.size())));
  std::vector<double> d2(data.size(), std::numeric_limits<double>::infinity());
  while (centers.size() < k) {
    const auto newest = centers.row(centers.size() - 1);
    double total = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      d2[i] = std::min(d2[i], squared_distance(data.row(i), newest));
      total += d2[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      const double target = rng.uniform01() * total;
      double cumulative = 0.0;
      pick = data.size() - 1;
      for (std::size_t i = 0; i < data.size(); ++i) {
        cumulative += d2[i];
        if (cumulative > target) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.index(data.size());
    }
    centers.append_row(data.row(pick));
  }
  return centers;
}

}  // namespace

std::size_t ClusterModel::nearest(std::span<const double> p) const {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centers.size(); ++c) {
    const double dist = squared_distance(p, centers.row(c));
    if (dist < best_d) {
      best_d = dist;
      best = c;
    }
  }
  return best;
}

std::vector<std::size_t> ClusterModel::sizes() const {
  std::vector<std::size_t> out(k, 0);
  for (const auto a : assignment) ++out[a];
  return out;
}

ClusterModel fit_clusters(Rng& rng, const PointSet& data, std::size_t k, std::size_t max_iters) {
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "fit_clusters: k must be at least 1");
  if (data.size() < k) {
    throw Error(ErrorCode::kInvalidArgument, "fit_clusters: " + std::to_string(data.size()) +
                                                 " points cannot form " + std::to_string(k) + " clusters");
  }
  const std::size_t n = data.size();
  const std::size_t d = data.dim();

  ClusterModel model;
  model.k = k;
  model.centers = plus_plus_seeds(rng, data, k);
  model.assignment.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) model.assignment[i] = model.nearest(data.row(i));

  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    PointSet sums(k, d);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = model.assignment[i];
      ++counts[c];
      auto s = sums.row(c);
      const auto r = data.row(i);
      for (std::size_t j = 0; j < d; ++j) s[j] += r[j];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        auto center = model.centers.row(c);
        const auto s = sums.row(c);
        for (std::size_t j = 0; j < d; ++j) center[j] = s[j] / static_cast<double>(counts[c]);
        continue;
      }
      // Empty cluster: move it onto the point worst served by its current center.
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double dist = squared_distance(data.row(i), model.centers.row(model.assignment[i]));
        if (dist > far_d) {
          far_d = dist;
          far = i;
        }
      }
      const auto r = data.row(far);
      std::copy(r.begin(), r.end(), model.centers.row(c).begin());
      model.assignment[far] = c;
    }

    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = model.nearest(data.row(i));
      if (c != model.assignment[i]) {
        model.assignment[i] = c;
        changed = true;
      }
    }
    if (!changed) break;
  }

  model.stds = PointSet(k, d);
  model.weights.assign(k, 0.0);
  const auto counts = model.sizes();
  PointSet means(k, d);
  for (std::size_t i = 0; i < n; ++i) {
    auto m = means.row(model.assignment[i]);
    const auto r = data.row(i);
    for (std::size_t j = 0; j < d; ++j) m[j] += r[j];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] == 0) continue;
    auto m = means.row(c);
    for (std::size_t j = 0; j < d; ++j) m[j] /= static_cast<double>(counts[c]);
    std::copy(m.begin(), m.end(), model.centers.row(c).begin());
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = model.assignment[i];
    auto s = model.stds.row(c);
    const auto r = data.row(i);
    const auto m = means.row(c);
    for (std::size_t j = 0; j < d; ++j) s[j] += (r[j] - m[j]) * (r[j] - m[j]);
  }
  for (std::size_t c = 0; c < k; ++c) {
    model.weights[c] = static_cast<double>(counts[c]) / static_cast<double>(n);
    if (counts[c] == 0) continue;
    auto s = model.stds.row(c);
    for (std::size_t j = 0; j < d; ++j) s[j] = std::sqrt(s[j] / static_cast<double>(counts[c]));
  }
  return model;
}

}  // namespace gtn
