#include "gtn/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>
#include <thread>

#include "gtn/error.hpp"

namespace gtn {

PointSet sample_standard_normal(Rng& rng, std::size_t n, std::size_t d) {
  PointSet out(n, d);
  for (double& v : out.values()) v = rng.normal();
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

std::vector<double> l2_norms(const PointSet& points) {
  std::vector<double> out(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) out[i] = l2_norm(points.row(i));
  return out;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "cosine_similarity: vectors have dimensions " +
                                                   std::to_string(a.size()) + " and " + std::to_string(b.size()));
  }
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (!(na > 0.0)) throw Error(ErrorCode::kInvalidArgument, "cosine_similarity: argument 'a' has zero norm");
  if (!(nb > 0.0)) throw Error(ErrorCode::kInvalidArgument, "cosine_similarity: argument 'b' has zero norm");
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

std::vector<double> column_means(const PointSet& points) {
  std::vector<double> mean(points.dim(), 0.0);
  if (points.empty()) return mean;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto r = points.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) mean[j] += r[j];
  }
  for (double& m : mean) m /= static_cast<double>(points.size());
  return mean;
}

std::vector<double> column_stddevs(const PointSet& points) {
  const auto mean = column_means(points);
  std::vector<double> var(points.dim(), 0.0);
  if (points.empty()) return var;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto r = points.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) var[j] += (r[j] - mean[j]) * (r[j] - mean[j]);
  }
  for (double& v : var) v = std::sqrt(v / static_cast<double>(points.size()));
  return var;
}

Centered center(const PointSet& points) {
  if (points.empty()) throw Error(ErrorCode::kEmptyData, "center: empty point set");
  auto mean = column_means(points);
  return {untranslate(points, mean), std::move(mean)};
}

PointSet translate(const PointSet& points, std::span<const double> offset) {
  PointSet out = points;
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto r = out.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += offset[j];
  }
  return out;
}

PointSet untranslate(const PointSet& points, std::span<const double> offset) {
  PointSet out = points;
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto r = out.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] -= offset[j];
  }
  return out;
}

std::size_t worker_threads() {
  std::size_t hw = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("GTN_LAB_THREADS")) {
    char* end = nullptr;
    const long requested = std::strtol(env, &end, 10);
    if (end != env && requested > 0) hw = std::min(hw, static_cast<std::size_t>(requested));
  }
  return hw;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body) {
  if (n == 0) return;
  const std::size_t workers = std::min(worker_threads(), std::max<std::size_t>(1, n / 256));
  if (workers <= 1) {
    body(0, n);
    return;
  }
  const std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::jthread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    threads.emplace_back([&body, begin, end] { body(begin, end); });
  }
}

}  // namespace gtn
