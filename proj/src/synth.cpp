#include "gtn/synth.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gtn/error.hpp"
#include "gtn/numeric.hpp"

namespace gtn {

void SwissRollSpec::validate() const {
  if (!(theta_min < theta_max)) throw Error(ErrorCode::kInvalidArgument, "swiss roll: theta_min must be < theta_max");
}

UniformBoxSpec UniformBoxSpec::unit(std::size_t d) {
  return {std::vector<double>(d, 0.0), std::vector<double>(d, 1.0)};
}

bool UniformBoxSpec::contains(std::span<const double> p, double margin) const {
  for (std::size_t j = 0; j < lows.size(); ++j) {
    if (p[j] < lows[j] - margin || p[j] > highs[j] + margin) return false;
  }
  return true;
}

void UniformBoxSpec::validate() const {
  if (lows.empty() || lows.size() != highs.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "uniform box: lows and highs must be nonempty and equal length");
  }
  for (std::size_t j = 0; j < lows.size(); ++j) {
    if (!(lows[j] < highs[j])) {
      throw Error(ErrorCode::kInvalidArgument, "uniform box: lows[" + std::to_string(j) + "] must be < highs");
    }
  }
}

namespace {

bool boxes_overlap(const UniformBoxSpec& a, const UniformBoxSpec& b) {
  for (std::size_t j = 0; j < a.dim(); ++j) {
    if (a.highs[j] <= b.lows[j] || b.highs[j] <= a.lows[j]) return false;
  }
  return true;
}

}  // namespace

void DisjointUniformSpec::validate() const {
  if (boxes.empty() || boxes.size() != weights.size()) {
    throw Error(ErrorCode::kInvalidArgument, "disjoint uniform: need one weight per box");
  }
  double total = 0.0;
  for (std::size_t b = 0; b < boxes.size(); ++b) {
    boxes[b].validate();
    if (boxes[b].dim() != boxes.front().dim()) {
      throw Error(ErrorCode::kDimensionMismatch, "disjoint uniform: boxes differ in dimension");
    }
    if (weights[b] < 0.0) throw Error(ErrorCode::kInvalidArgument, "disjoint uniform: negative weight");
    total += weights[b];
    for (std::size_t c = 0; c < b; ++c) {
      if (boxes_overlap(boxes[b], boxes[c])) {
        throw Error(ErrorCode::kInvalidArgument,
                    "disjoint uniform: boxes " + std::to_string(c) + " and " + std::to_string(b) + " overlap");
      }
    }
  }
  if (std::abs(total - 1.0) > 1e-12) throw Error(ErrorCode::kInvalidArgument, "disjoint uniform: weights must sum to 1");
}

PointSet sample_swiss_roll_theta(Rng& rng, std::size_t n, const SwissRollSpec& spec) {
  spec.validate();
  PointSet out(n, 1);
  for (double& v : out.values()) v = rng.uniform(spec.theta_min, spec.theta_max);
  return out;
}

PointSet swiss_roll_embed(const PointSet& theta) {
  if (theta.dim() != 1) {
    throw Error(ErrorCode::kDimensionMismatch,
                "swiss_roll_embed expects 1-dimensional input, got " + std::to_string(theta.dim()));
  }
  PointSet out(theta.size(), 2);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double t = theta(i, 0);
    out(i, 0) = t * std::cos(t);
    out(i, 1) = t * std::sin(t);
  }
  return out;
}

PointSet sample_uniform_box(Rng& rng, std::size_t n, const UniformBoxSpec& spec) {
  spec.validate();
  PointSet out(n, spec.dim());
  for (std::size_t i = 0; i < n; ++i) {
    auto r = out.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] = rng.uniform(spec.lows[j], spec.highs[j]);
  }
  return out;
}

LabeledSample sample_disjoint_uniform(Rng& rng, std::size_t n, const DisjointUniformSpec& spec) {
  spec.validate();
  LabeledSample out{PointSet(n, spec.dim()), std::vector<std::size_t>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform01();
    std::size_t box = spec.boxes.size() - 1;
    double cumulative = 0.0;
    for (std::size_t b = 0; b < spec.boxes.size(); ++b) {
      cumulative += spec.weights[b];
      if (u < cumulative) {
        box = b;
        break;
      }
    }
    // Skip trailing zero-weight boxes that the fallthrough could otherwise select.
    while (spec.weights[box] == 0.0 && box > 0) --box;
    out.labels[i] = box;
    const auto& spec_box = spec.boxes[box];
    auto r = out.points.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] = rng.uniform(spec_box.lows[j], spec_box.highs[j]);
  }
  return out;
}

double analytic_h_normal_to_uniform(double y) { return 0.5 * std::erfc(-y / std::numbers::sqrt2); }

double empirical_h_1d_sorted(std::span<const double> sorted_x, std::span<const double> sorted_y, double y) {
  const std::size_t ny = sorted_y.size();
  const std::size_t nx = sorted_x.size();
  if (ny < 2 || nx < 2) throw Error(ErrorCode::kInvalidArgument, "empirical transport needs at least 2 samples");

  double q;
  if (y <= sorted_y.front()) {
    q = 0.0;
  } else if (y >= sorted_y.back()) {
    q = 1.0;
  } else {
    const auto it = std::upper_bound(sorted_y.begin(), sorted_y.end(), y);
    const std::size_t k = static_cast<std::size_t>(it - sorted_y.begin()) - 1;
    const double frac = (y - sorted_y[k]) / (sorted_y[k + 1] - sorted_y[k]);
    q = (static_cast<double>(k) + frac) / static_cast<double>(ny - 1);
  }

  const double pos = q * static_cast<double>(nx - 1);
  const std::size_t lo = std::min(static_cast<std::size_t>(pos), nx - 2);
  const double frac = pos - static_cast<double>(lo);
  return sorted_x[lo] + frac * (sorted_x[lo + 1] - sorted_x[lo]);
}

double empirical_h_1d_oracle(const PointSet& samples_x, const PointSet& samples_y, double y) {
  if (samples_x.dim() != 1 || samples_y.dim() != 1) {
    throw Error(ErrorCode::kDimensionMismatch, "empirical transport expects 1-dimensional samples");
  }
  auto xs = samples_x.column(0);
  auto ys = samples_y.column(0);
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  return empirical_h_1d_sorted(xs, ys, y);
}

std::vector<double> radial_h_oracle(std::span<const double> norms_x, std::span<const double> norms_y,
                                    std::span<const double> y) {
  std::vector<double> out(y.size(), 0.0);
  const double ny = l2_norm(y);
  if (ny == 0.0) return out;
  std::vector<double> xs(norms_x.begin(), norms_x.end());
  std::vector<double> ys(norms_y.begin(), norms_y.end());
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  const double scale = empirical_h_1d_sorted(xs, ys, ny) / ny;
  for (std::size_t j = 0; j < y.size(); ++j) out[j] = scale * y[j];
  return out;
}

}  // namespace gtn
