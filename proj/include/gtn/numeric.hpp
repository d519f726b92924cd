#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "gtn/point_set.hpp"
#include "gtn/rng.hpp"

namespace gtn {

/// n i.i.d. draws from the d-dimensional standard normal, row by row.
PointSet sample_standard_normal(Rng& rng, std::size_t n, std::size_t d);

double l2_norm(std::span<const double> v);
std::vector<double> l2_norms(const PointSet& points);

double dot(std::span<const double> a, std::span<const double> b);

/// a·b / (|a||b|) clamped to [-1, 1]. Throws if either vector has zero norm.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

struct Centered {
  PointSet points;
  std::vector<double> mean;
};

Centered center(const PointSet& points);
std::vector<double> column_means(const PointSet& points);
/// Per-coordinate population standard deviation.
std::vector<double> column_stddevs(const PointSet& points);

/// Adds `offset` to every row.
PointSet translate(const PointSet& points, std::span<const double> offset);
/// Subtracts `offset` from every row.
PointSet untranslate(const PointSet& points, std::span<const double> offset);

/// Worker count from GTN_LAB_THREADS, defaulting to hardware concurrency.
std::size_t worker_threads();

/// Runs body(begin, end) over contiguous chunks of [0, n). Each index is
/// handled by exactly one call, so writes to per-index slots are race free
/// and results do not depend on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace gtn
