#include "gtn/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "gtn/error.hpp"
#include "gtn/numeric.hpp"
#include "gtn/train.hpp"

namespace gtn {

namespace {

std::vector<double> sorted_column(const PointSet& sample, const char* what) {
  if (sample.dim() != 1) {
    throw Error(ErrorCode::kDimensionMismatch, std::string(what) + ": KS statistic needs 1-dimensional samples");
  }
  if (sample.size() < kMinKsSample) {
    throw Error(ErrorCode::kInvalidArgument, std::string(what) + ": KS statistic needs at least " +
                                                 std::to_string(kMinKsSample) + " points, got " +
                                                 std::to_string(sample.size()));
  }
  auto v = sample.column(0);
  std::sort(v.begin(), v.end());
  return v;
}

PointSet capped(const PointSet& s, std::uint64_t seed) {
  if (s.size() <= kEnergyDistanceCap) return s;
  Rng rng(seed);
  auto perm = random_permutation(rng, s.size());
  perm.resize(kEnergyDistanceCap);
  return s.select(perm);
}

double mean_pairwise_distance(const PointSet& a, const PointSet& b) {
  std::vector<double> row_sums(a.size(), 0.0);
  parallel_for(a.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto ai = a.row(i);
      double s = 0.0;
      for (std::size_t j = 0; j < b.size(); ++j) {
        const auto bj = b.row(j);
        double d2 = 0.0;
        for (std::size_t k = 0; k < ai.size(); ++k) d2 += (ai[k] - bj[k]) * (ai[k] - bj[k]);
        s += std::sqrt(d2);
      }
      row_sums[i] = s;
    }
  });
  const double total = std::accumulate(row_sums.begin(), row_sums.end(), 0.0);
  return total / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

double swiss_sq_distance(double px, double py, double theta) {
  const double dx = px - theta * std::cos(theta);
  const double dy = py - theta * std::sin(theta);
  return dx * dx + dy * dy;
}

double golden_section_min(double px, double py, double lo, double hi) {
  constexpr double kInvPhi = 0.6180339887498949;
  double c = hi - kInvPhi * (hi - lo);
  double d = lo + kInvPhi * (hi - lo);
  double fc = swiss_sq_distance(px, py, c);
  double fd = swiss_sq_distance(px, py, d);
  for (int it = 0; it < 80 && hi - lo > 1e-13; ++it) {
    if (fc < fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - kInvPhi * (hi - lo);
      fc = swiss_sq_distance(px, py, c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + kInvPhi * (hi - lo);
      fd = swiss_sq_distance(px, py, d);
    }
  }
  return std::min({fc, fd, swiss_sq_distance(px, py, lo), swiss_sq_distance(px, py, hi)});
}

}  // namespace

void GridSpec::validate() const {
  if (bins_per_axis < 2) throw Error(ErrorCode::kInvalidArgument, "grid: bins_per_axis must be >= 2");
  if (lows.empty() || lows.size() != highs.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "grid: lows and highs must be nonempty and of equal length");
  }
  for (std::size_t j = 0; j < lows.size(); ++j) {
    if (!(lows[j] < highs[j])) throw Error(ErrorCode::kInvalidArgument, "grid: lows must be below highs");
  }
}

double ks_statistic(const PointSet& sample, const std::function<double(double)>& cdf) {
  const auto xs = sorted_column(sample, "ks_statistic");
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double ks_statistic(const PointSet& sample_a, const PointSet& sample_b) {
  const auto a = sorted_column(sample_a, "ks_statistic (first sample)");
  const auto b = sorted_column(sample_b, "ks_statistic (second sample)");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

ChiSquareResult grid_chi_square(const PointSet& sample, const GridSpec& grid) {
  grid.validate();
  if (sample.empty()) throw Error(ErrorCode::kEmptyData, "grid_chi_square: empty sample");
  if (sample.dim() != grid.lows.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "grid_chi_square: sample dimension " + std::to_string(sample.dim()) +
                                                   " does not match grid dimension " +
                                                   std::to_string(grid.lows.size()));
  }
  const std::size_t d = sample.dim();
  std::size_t cells = 1;
  for (std::size_t j = 0; j < d; ++j) {
    if (cells > 10'000'000 / grid.bins_per_axis) {
      throw Error(ErrorCode::kInvalidArgument, "grid_chi_square: grid has too many cells");
    }
    cells *= grid.bins_per_axis;
  }

  std::vector<std::size_t> counts(cells, 0);
  std::size_t inside = 0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const auto r = sample.row(i);
    std::size_t cell = 0;
    bool in_box = true;
    for (std::size_t j = 0; j < d && in_box; ++j) {
      if (r[j] < grid.lows[j] || r[j] > grid.highs[j]) {
        in_box = false;
        break;
      }
      const double t = (r[j] - grid.lows[j]) / (grid.highs[j] - grid.lows[j]);
      const auto bin = std::min(static_cast<std::size_t>(t * static_cast<double>(grid.bins_per_axis)),
                                grid.bins_per_axis - 1);
      cell = cell * grid.bins_per_axis + bin;
    }
    if (!in_box) continue;
    ++counts[cell];
    ++inside;
  }

  ChiSquareResult result;
  result.dof = cells - 1;
  result.out_of_box_fraction = 1.0 - static_cast<double>(inside) / static_cast<double>(sample.size());
  if (inside == 0) return result;
  const double expected = static_cast<double>(inside) / static_cast<double>(cells);
  for (const auto c : counts) {
    const double diff = static_cast<double>(c) - expected;
    result.statistic += diff * diff / expected;
  }
  return result;
}

std::vector<double> manifold_distance_swiss(const PointSet& points, const SwissRollSpec& spec,
                                            std::size_t grid_resolution) {
  spec.validate();
  if (points.dim() != 2) {
    throw Error(ErrorCode::kDimensionMismatch, "manifold_distance_swiss expects 2-dimensional points");
  }
  if (grid_resolution < 2) throw Error(ErrorCode::kInvalidArgument, "manifold_distance_swiss: grid_resolution must be >= 2");

  const std::size_t m = grid_resolution;
  const double step = (spec.theta_max - spec.theta_min) / static_cast<double>(m - 1);
  std::vector<double> thetas(m);
  std::vector<double> cx(m);
  std::vector<double> cy(m);
  for (std::size_t g = 0; g < m; ++g) {
    thetas[g] = g + 1 == m ? spec.theta_max : spec.theta_min + step * static_cast<double>(g);
    cx[g] = thetas[g] * std::cos(thetas[g]);
    cy[g] = thetas[g] * std::sin(thetas[g]);
  }

  std::vector<double> out(points.size());
  parallel_for(points.size(), [&](std::size_t begin, std::size_t end) {
    std::vector<double> d2(m);
    for (std::size_t i = begin; i < end; ++i) {
      const double px = points(i, 0);
      const double py = points(i, 1);
      for (std::size_t g = 0; g < m; ++g) {
        const double dx = px - cx[g];
        const double dy = py - cy[g];
        d2[g] = dx * dx + dy * dy;
      }
      double best = *std::min_element(d2.begin(), d2.end());
      for (std::size_t g = 0; g < m; ++g) {
        const bool left_ok = g == 0 || d2[g] <= d2[g - 1];
        const bool right_ok = g + 1 == m || d2[g] <= d2[g + 1];
        if (!left_ok || !right_ok) continue;
        const double lo = thetas[g == 0 ? 0 : g - 1];
        const double hi = thetas[g + 1 == m ? g : g + 1];
        best = std::min(best, golden_section_min(px, py, lo, hi));
      }
      out[i] = std::sqrt(best);
    }
  });
  return out;
}

double energy_distance(const PointSet& sample_a, const PointSet& sample_b, std::uint64_t subsample_seed) {
  if (sample_a.dim() != sample_b.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "energy_distance: samples have dimensions " +
                                                   std::to_string(sample_a.dim()) + " and " +
                                                   std::to_string(sample_b.dim()));
  }
  if (sample_a.size() < 10 || sample_b.size() < 10) {
    throw Error(ErrorCode::kInvalidArgument, "energy_distance: each sample needs at least 10 points");
  }
  const Rng seeds(subsample_seed);
  const PointSet a = capped(sample_a, seeds.split(1).seed());
  const PointSet b = capped(sample_b, seeds.split(2).seed());
  const double ab = mean_pairwise_distance(a, b);
  const double aa = mean_pairwise_distance(a, a);
  const double bb = mean_pairwise_distance(b, b);
  return std::max(0.0, 2.0 * ab - aa - bb);
}

double coverage_score(const PointSet& generated, const PointSet& held_out, double radius) {
  if (generated.dim() != held_out.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "coverage_score: generated and held-out dimensions differ");
  }
  if (held_out.empty()) return 0.0;
  const double r2 = radius * radius;
  std::vector<unsigned char> covered(held_out.size(), 0);
  parallel_for(held_out.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto h = held_out.row(i);
      for (std::size_t j = 0; j < generated.size(); ++j) {
        const auto g = generated.row(j);
        double d2 = 0.0;
        for (std::size_t k = 0; k < h.size(); ++k) d2 += (h[k] - g[k]) * (h[k] - g[k]);
        if (d2 <= r2) {
          covered[i] = 1;
          break;
        }
      }
    }
  });
  const auto hits = std::count(covered.begin(), covered.end(), 1);
  return static_cast<double>(hits) / static_cast<double>(held_out.size());
}

double interpolation_continuity(const MlpModel& model, std::span<const double> y_left,
                                std::span<const double> y_right, std::size_t steps) {
  const std::size_t d = model.config().input_dim;
  if (y_left.size() != d || y_right.size() != d) {
    throw Error(ErrorCode::kDimensionMismatch, "interpolation_continuity: endpoints must match model input_dim");
  }
  if (steps < 2) throw Error(ErrorCode::kInvalidArgument, "interpolation_continuity: steps must be >= 2");
  PointSet path(steps + 1, d);
  for (std::size_t i = 0; i <= steps; ++i) {
    const double lambda = static_cast<double>(i) / static_cast<double>(steps);
    auto r = path.row(i);
    for (std::size_t j = 0; j < d; ++j) r[j] = y_right[j] + lambda * (y_left[j] - y_right[j]);
  }
  const auto out = predict(model, path);
  double max_step = 0.0;
  for (std::size_t i = 0; i < steps; ++i) {
    double d2 = 0.0;
    for (std::size_t k = 0; k < out.dim(); ++k) {
      const double diff = out(i + 1, k) - out(i, k);
      d2 += diff * diff;
    }
    max_step = std::max(max_step, std::sqrt(d2));
  }
  return max_step;
}

double monotonicity_violations(std::span<const double> outputs) {
  if (outputs.size() < 2) return 0.0;
  std::size_t violations = 0;
  for (std::size_t i = 0; i + 1 < outputs.size(); ++i) {
    if (outputs[i + 1] < outputs[i]) ++violations;
  }
  return static_cast<double>(violations) / static_cast<double>(outputs.size() - 1);
}

double monotonicity_violations(const MlpModel& model, const PointSet& grid) {
  if (model.config().input_dim != 1 || model.config().output_dim != 1 || grid.dim() != 1) {
    throw Error(ErrorCode::kDimensionMismatch, "monotonicity_violations needs a 1D model and a 1D grid");
  }
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    if (grid(i + 1, 0) < grid(i, 0)) throw Error(ErrorCode::kInvalidArgument, "monotonicity_violations: grid is not sorted");
  }
  const auto out = predict(model, grid);
  return monotonicity_violations(out.values());
}

PointSet linspace(double lo, double hi, std::size_t n) {
  PointSet out(n, 1);
  if (n == 1) {
    out(0, 0) = lo;
    return out;
  }
  for (std::size_t i = 0; i < n; ++i) {
    out(i, 0) = i + 1 == n ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return out;
}

}  // namespace gtn
