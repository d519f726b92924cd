#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "gtn/mlp.hpp"
#include "gtn/point_set.hpp"
#include "gtn/synth.hpp"

namespace gtn {

struct GridSpec {
  std::size_t bins_per_axis = 10;
  std::vector<double> lows;
  std::vector<double> highs;

  void validate() const;
};

struct ChiSquareResult {
  double statistic = 0.0;
  std::size_t dof = 0;
  double out_of_box_fraction = 0.0;
};

/// Smallest sample accepted by the KS statistics.
inline constexpr std::size_t kMinKsSample = 10;

/// One-sample KS distance sup_x |F_n(x) - cdf(x)| over a 1D sample.
double ks_statistic(const PointSet& sample, const std::function<double(double)>& cdf);

/// Two-sample KS distance between the empirical CDFs of two 1D samples.
double ks_statistic(const PointSet& sample_a, const PointSet& sample_b);

/// Pearson chi-square of in-box counts against a uniform expectation over
/// bins_per_axis^d cells. Points outside the box are excluded from the
/// statistic and reported as a fraction; points on the upper edge fall in the
/// last cell.
ChiSquareResult grid_chi_square(const PointSet& sample, const GridSpec& grid);

/// Distance from each 2D point to the curve theta(cos theta, sin theta),
/// theta in [theta_min, theta_max]. Every local minimum of a uniform
/// theta-grid with grid_resolution nodes is refined by golden-section search
/// within its neighbouring grid cells.
std::vector<double> manifold_distance_swiss(const PointSet& points, const SwissRollSpec& spec,
                                            std::size_t grid_resolution);

/// Samples larger than this are subsampled (seeded) before energy_distance.
inline constexpr std::size_t kEnergyDistanceCap = 5000;

/// 2 E|A-B| - E|A-A'| - E|B-B'| with every expectation an average over all
/// ordered pairs (diagonal included).
double energy_distance(const PointSet& sample_a, const PointSet& sample_b, std::uint64_t subsample_seed = 0);

/// Fraction of held-out points whose nearest generated point lies within `radius`.
double coverage_score(const PointSet& generated, const PointSet& held_out, double radius);

/// Largest output jump between consecutive points of the segment
/// lambda*y_left + (1-lambda)*y_right, lambda = i/steps for i = 0..steps.
/// Doubling `steps` nests the evaluation grid, so the result cannot grow.
double interpolation_continuity(const MlpModel& model, std::span<const double> y_left,
                                std::span<const double> y_right, std::size_t steps);

/// Fraction of adjacent pairs with outputs[i+1] < outputs[i]. Ties are not
/// violations.
double monotonicity_violations(std::span<const double> outputs);

/// Same, for a 1D model evaluated on an ascending 1D grid.
double monotonicity_violations(const MlpModel& model, const PointSet& grid);

/// n evenly spaced points from lo to hi inclusive, as an n×1 set.
PointSet linspace(double lo, double hi, std::size_t n);

}  // namespace gtn
