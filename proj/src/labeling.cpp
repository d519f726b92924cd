#include "gtn/labeling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "gtn/error.hpp"
#include "gtn/numeric.hpp"

namespace gtn {

namespace {

void check_same_shape(const PointSet& d_x, const PointSet& d_y, const char* what) {
  if (d_x.size() != d_y.size()) {
    throw Error(ErrorCode::kDimensionMismatch, std::string(what) + ": data has " + std::to_string(d_x.size()) +
                                                   " rows but the source sample has " + std::to_string(d_y.size()));
  }
  if (d_x.dim() != d_y.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, std::string(what) + ": data dimension " + std::to_string(d_x.dim()) +
                                                   " differs from source dimension " + std::to_string(d_y.dim()));
  }
}

std::vector<std::size_t> argsort_stable(const std::vector<double>& keys) {
  std::vector<std::size_t> order(keys.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
  return order;
}

LabeledDataset materialize(const PointSet& d_x, const PointSet& d_y, const std::vector<Match>& matches) {
  std::vector<std::size_t> src(matches.size());
  std::vector<std::size_t> tgt(matches.size());
  for (std::size_t i = 0; i < matches.size(); ++i) {
    src[i] = matches[i].source;
    tgt[i] = matches[i].target;
  }
  return {d_y.select(src), d_x.select(tgt)};
}

// Remaining targets in norm order, stored column-wise so the score loop runs
// over contiguous memory. Removed entries are tombstoned and squeezed out once
// they outnumber the live ones.
class CandidatePool {
 public:
  CandidatePool(const PointSet& d_x, const std::vector<std::size_t>& order)
      : dim_(d_x.dim()), coords_(dim_), norms_(order.size()), rows_(order), alive_(order.size(), 1) {
    for (auto& c : coords_) c.resize(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
      const auto r = d_x.row(order[i]);
      for (std::size_t k = 0; k < dim_; ++k) coords_[k][i] = r[k];
      norms_[i] = l2_norm(r);
    }
    live_ = order.size();
    scores_.resize(order.size());
  }

  // Row index of the best remaining target for `y`; removes it from the pool.
  std::size_t take_best(std::span<const double> y, double tie_tolerance) {
    const double ny = l2_norm(y);
    const std::size_t m = rows_.size();
    double* s = scores_.data();

    std::fill(s, s + m, 0.0);
    for (std::size_t k = 0; k < dim_; ++k) {
      const double yk = y[k];
      const double* xk = coords_[k].data();
      for (std::size_t i = 0; i < m; ++i) s[i] += xk[i] * yk;
    }

    const double dead = -std::numeric_limits<double>::infinity();
    double best = dead;
    const bool y_has_direction = ny >= kZeroNormThreshold;
    for (std::size_t i = 0; i < m; ++i) {
      double score;
      if (!alive_[i]) {
        score = dead;
      } else if (!y_has_direction || norms_[i] < kZeroNormThreshold) {
        score = 0.0;
      } else {
        score = std::clamp(s[i] / (norms_[i] * ny), -1.0, 1.0);
      }
      s[i] = score;
      best = std::max(best, score);
    }

    const double cutoff = best - tie_tolerance;
    std::size_t pick = 0;
    while (s[pick] < cutoff) ++pick;

    const std::size_t row = rows_[pick];
    alive_[pick] = 0;
    --live_;
    if (m - live_ > live_ && live_ > 0) compact();
    return row;
  }

 private:
  void compact() {
    std::size_t w = 0;
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      if (!alive_[i]) continue;
      for (std::size_t k = 0; k < dim_; ++k) coords_[k][w] = coords_[k][i];
      norms_[w] = norms_[i];
      rows_[w] = rows_[i];
      ++w;
    }
    for (auto& c : coords_) c.resize(w);
    norms_.resize(w);
    rows_.resize(w);
    alive_.assign(w, 1);
  }

  std::size_t dim_;
  std::vector<std::vector<double>> coords_;
  std::vector<double> norms_;
  std::vector<std::size_t> rows_;
  std::vector<unsigned char> alive_;
  std::vector<double> scores_;
  std::size_t live_ = 0;
};

}  // namespace

LabeledDataset label_1d(const PointSet& d_x, const PointSet& d_y) {
  check_same_shape(d_x, d_y, "label_1d");
  if (d_x.dim() != 1) {
    throw Error(ErrorCode::kDimensionMismatch, "label_1d expects 1-dimensional data, got " + std::to_string(d_x.dim()));
  }
  const auto x_order = argsort_stable(d_x.column(0));
  const auto y_order = argsort_stable(d_y.column(0));
  return {d_y.select(y_order), d_x.select(x_order)};
}

std::vector<Match> greedy_cosine_matching(const PointSet& d_x, const PointSet& d_y, double tie_tolerance) {
  check_same_shape(d_x, d_y, "label_greedy_cosine");
  if (!(tie_tolerance >= 0.0) || !std::isfinite(tie_tolerance)) {
    throw Error(ErrorCode::kInvalidArgument, "tie tolerance must be finite and >= 0");
  }
  const auto x_order = argsort_stable(l2_norms(d_x));
  const auto y_order = argsort_stable(l2_norms(d_y));

  CandidatePool pool(d_x, x_order);
  std::vector<Match> matches;
  matches.reserve(d_y.size());
  for (const std::size_t yi : y_order) {
    matches.push_back({yi, pool.take_best(d_y.row(yi), tie_tolerance)});
  }
  return matches;
}

LabeledDataset label_greedy_cosine(const PointSet& d_x, const PointSet& d_y, double tie_tolerance) {
  return materialize(d_x, d_y, greedy_cosine_matching(d_x, d_y, tie_tolerance));
}

CenteredLabeling label_greedy_centered(const PointSet& d_x, const PointSet& d_y, bool rescale,
                                       double tie_tolerance) {
  auto [centered, mean] = center(d_x);
  std::vector<double> scale(d_x.dim(), 1.0);
  if (rescale) {
    scale = column_stddevs(d_x);
    for (std::size_t j = 0; j < scale.size(); ++j) {
      if (!(scale[j] > 0.0)) {
        throw Error(ErrorCode::kInvalidArgument,
                    "cannot rescale: coordinate " + std::to_string(j) + " has zero spread");
      }
    }
    for (std::size_t i = 0; i < centered.size(); ++i) {
      auto r = centered.row(i);
      for (std::size_t j = 0; j < r.size(); ++j) r[j] /= scale[j];
    }
  }
  const auto matches = greedy_cosine_matching(centered, d_y, tie_tolerance);
  return {materialize(d_x, d_y, matches), std::move(mean), std::move(scale)};
}

ClusteredLabeling label_clustered(Rng& rng, const PointSet& data, const ClusterModel& clusters,
                                  double tie_tolerance) {
  if (clusters.assignment.size() != data.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "label_clustered: cluster assignment covers " +
                                                   std::to_string(clusters.assignment.size()) + " rows, data has " +
                                                   std::to_string(data.size()));
  }
  if (clusters.centers.dim() != data.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "label_clustered: cluster centers differ in dimension from data");
  }
  const std::size_t d = data.dim();

  ClusteredLabeling out{LabeledDataset{PointSet(0, d), PointSet(0, d)}, {}, clusters};
  for (std::size_t c = 0; c < clusters.k; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (clusters.assignment[i] == c) members.push_back(i);
    }
    if (members.size() < 2) {
      throw Error(ErrorCode::kInvalidArgument, "cluster " + std::to_string(c) + " has " +
                                                   std::to_string(members.size()) +
                                                   " point(s); at least 2 are needed, try a smaller k");
    }
    const auto center_c = clusters.centers.row(c);
    const auto std_c = clusters.stds.row(c);

    const PointSet x_raw = data.select(members);
    PointSet y_raw(members.size(), d);
    for (std::size_t i = 0; i < y_raw.size(); ++i) {
      auto r = y_raw.row(i);
      for (std::size_t j = 0; j < d; ++j) r[j] = center_c[j] + std_c[j] * rng.normal();
    }

    const auto matches = greedy_cosine_matching(untranslate(x_raw, center_c), untranslate(y_raw, center_c), tie_tolerance);
    for (const auto& m : matches) {
      out.pairs.sources.append_row(y_raw.row(m.source));
      out.pairs.targets.append_row(x_raw.row(m.target));
      out.cluster_of_pair.push_back(c);
    }
  }
  return out;
}

}  // namespace gtn
