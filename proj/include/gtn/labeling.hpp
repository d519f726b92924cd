#pragma once

#include <cstddef>
#include <vector>

#include "gtn/kmeans.hpp"
#include "gtn/point_set.hpp"
#include "gtn/rng.hpp"

namespace gtn {

/// Cosine scores within this distance of the best remaining score count as
/// ties. Exact equality is too brittle: points on one ray from the origin
/// score 1 only up to an ulp or two.
inline constexpr double kCosineTieTolerance = 1e-12;

/// Tie tolerance used by the experiment runner. Targets scoring within this
/// of the best cosine count as tied, so the norm order decides among them.
inline constexpr double kDefaultLabelTieTolerance = 1e-2;

/// Rows with a norm below this have no direction; they score 0 against everything.
inline constexpr double kZeroNormThreshold = 1e-12;

/// One labeled pair, as row indices into the source and target sets.
struct Match {
  std::size_t source;
  std::size_t target;

  friend bool operator==(const Match&, const Match&) = default;
};

/// Exact 1D rank matching: the i-th smallest source is paired with the i-th
/// smallest target. Equal values keep their input order. Pairs are returned
/// in ascending source order.
LabeledDataset label_1d(const PointSet& d_x, const PointSet& d_y);

/// Greedy cosine-similarity matching on centered inputs.
///
/// Both sets are sorted ascending by L2 norm (stable, so equal norms fall
/// back to row order). Sources are then visited in that order and each takes
/// the remaining target of highest cosine similarity; scores within
/// `tie_tolerance` of the best go to the earliest target in norm order,
/// i.e. the one closest to the origin. The matched target is removed.
/// Returned matches are in visiting order.
std::vector<Match> greedy_cosine_matching(const PointSet& d_x, const PointSet& d_y,
                                          double tie_tolerance = kCosineTieTolerance);

/// greedy_cosine_matching materialized as pairs. Inputs must already be
/// centered; see label_greedy_centered for the centering wrapper.
LabeledDataset label_greedy_cosine(const PointSet& d_x, const PointSet& d_y,
                                   double tie_tolerance = kCosineTieTolerance);

struct CenteredLabeling {
  /// Targets are the original (uncentered) rows of d_x.
  LabeledDataset pairs;
  std::vector<double> mean;
  /// Per-coordinate scale applied before matching; all ones unless rescaling.
  std::vector<double> scale;
};

/// Centers d_x by its mean (and, with `rescale`, divides each coordinate by
/// its standard deviation) before greedy matching against d_y.
CenteredLabeling label_greedy_centered(const PointSet& d_x, const PointSet& d_y, bool rescale = false,
                                       double tie_tolerance = kCosineTieTolerance);

struct ClusteredLabeling {
  LabeledDataset pairs;
  /// Cluster index of every pair, aligned with `pairs`.
  std::vector<std::size_t> cluster_of_pair;
  ClusterModel clusters;
};

/// Per-cluster greedy labeling for data with disconnected support.
///
/// For cluster c with n_c members, n_c sources are drawn from
/// N(center_c, diag(std_c^2)); members and sources are both centered on
/// center_c, matched greedily, and emitted in raw coordinates. Clusters are
/// processed in index order and concatenated.
ClusteredLabeling label_clustered(Rng& rng, const PointSet& data, const ClusterModel& clusters,
                                  double tie_tolerance = kCosineTieTolerance);

}  // namespace gtn
