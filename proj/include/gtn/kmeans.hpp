#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gtn/point_set.hpp"
#include "gtn/rng.hpp"

namespace gtn {

struct ClusterModel {
  std::size_t k = 0;
  PointSet centers;  // k×d
  PointSet stds;     // k×d, per-coordinate population std of each cluster
  std::vector<double> weights;
  std::vector<std::size_t> assignment;  // one entry per training row

  /// Nearest center by Euclidean distance, ties to the lower index.
  std::size_t nearest(std::span<const double> p) const;
  std::vector<std::size_t> sizes() const;
};

/// Lloyd's k-means with k-means++ seeding.
///
/// A center that loses all its points is reseeded at the point farthest from
/// its own center. Iteration stops once assignments are stable or after
/// max_iters rounds.
ClusterModel fit_clusters(Rng& rng, const PointSet& data, std::size_t k, std::size_t max_iters = 100);

}  // namespace gtn
