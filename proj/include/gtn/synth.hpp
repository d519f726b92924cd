#pragma once

#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "gtn/point_set.hpp"
#include "gtn/rng.hpp"

namespace gtn {

struct SwissRollSpec {
  double theta_min = 1.5 * std::numbers::pi;
  double theta_max = 4.5 * std::numbers::pi;

  void validate() const;
};

struct UniformBoxSpec {
  std::vector<double> lows;
  std::vector<double> highs;

  static UniformBoxSpec unit(std::size_t d);
  std::size_t dim() const noexcept { return lows.size(); }
  bool contains(std::span<const double> p, double margin = 0.0) const;
  void validate() const;
};

struct DisjointUniformSpec {
  std::vector<UniformBoxSpec> boxes;
  std::vector<double> weights;

  std::size_t dim() const { return boxes.front().dim(); }
  void validate() const;
};

struct LabeledSample {
  PointSet points;
  std::vector<std::size_t> labels;
};

PointSet sample_swiss_roll_theta(Rng& rng, std::size_t n, const SwissRollSpec& spec = {});

/// theta(cos theta, sin theta) per row of an n×1 input.
PointSet swiss_roll_embed(const PointSet& theta);

PointSet sample_uniform_box(Rng& rng, std::size_t n, const UniformBoxSpec& spec);

/// Each row picks its box by mixture weight, then draws uniformly inside it.
LabeledSample sample_disjoint_uniform(Rng& rng, std::size_t n, const DisjointUniformSpec& spec);

/// Standard normal CDF, Phi(y) = erfc(-y/sqrt 2)/2. libm's erfc is accurate to
/// a few ulp, far inside the 1e-7 absolute budget the oracles need.
double analytic_h_normal_to_uniform(double y);

/// Empirical quantile transport for 1D samples: rank `y` within samples_y,
/// then read the same quantile off samples_x. Both quantile maps interpolate
/// linearly between order statistics at plotting positions i/(n-1).
double empirical_h_1d_oracle(const PointSet& samples_x, const PointSet& samples_y, double y);

/// Same, with pre-sorted samples; avoids re-sorting for repeated queries.
double empirical_h_1d_sorted(std::span<const double> sorted_x, std::span<const double> sorted_y, double y);

/// Radial transport for rotation-invariant distributions: h1(|y|) y/|y|,
/// h1 being the empirical 1D transport between norm samples. Zero maps to zero.
std::vector<double> radial_h_oracle(std::span<const double> norms_x, std::span<const double> norms_y,
                                    std::span<const double> y);

}  // namespace gtn
