#include "gtn/point_set.hpp"

#include <cmath>
#include <string>

#include "gtn/error.hpp"

namespace gtn {

PointSet::PointSet(std::size_t n, std::size_t d) : n_(n), d_(d), values_(n * d, 0.0) {
  if (d == 0) throw Error(ErrorCode::kInvalidArgument, "point dimension must be at least 1");
}

PointSet::PointSet(std::size_t d, std::vector<double> values) : d_(d), values_(std::move(values)) {
  if (d == 0) throw Error(ErrorCode::kInvalidArgument, "point dimension must be at least 1");
  if (values_.size() % d != 0) {
    throw Error(ErrorCode::kDimensionMismatch,
                "value count " + std::to_string(values_.size()) + " is not a multiple of dimension " +
                    std::to_string(d));
  }
  n_ = values_.size() / d;
  check_finite();
}

PointSet PointSet::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw Error(ErrorCode::kEmptyData, "cannot infer dimension from zero rows");
  const std::size_t d = rows.front().size();
  std::vector<double> values;
  values.reserve(rows.size() * d);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != d) {
      throw Error(ErrorCode::kDimensionMismatch, "row " + std::to_string(i) + " has " +
                                                     std::to_string(rows[i].size()) + " entries, expected " +
                                                     std::to_string(d));
    }
    values.insert(values.end(), rows[i].begin(), rows[i].end());
  }
  return PointSet(d, std::move(values));
}

PointSet PointSet::from_matrix(const RowMatrix& m) {
  std::vector<double> values(m.data(), m.data() + m.size());
  return PointSet(static_cast<std::size_t>(m.cols()), std::move(values));
}

PointSet PointSet::select(std::span<const std::size_t> indices) const {
  PointSet out(indices.size(), d_);
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const auto src = row(indices[k]);
    std::copy(src.begin(), src.end(), out.row(k).begin());
  }
  return out;
}

std::vector<double> PointSet::column(std::size_t j) const {
  std::vector<double> out(n_);
  for (std::size_t i = 0; i < n_; ++i) out[i] = values_[i * d_ + j];
  return out;
}

void PointSet::append_row(std::span<const double> r) {
  if (r.size() != d_) {
    throw Error(ErrorCode::kDimensionMismatch,
                "appended row has " + std::to_string(r.size()) + " entries, expected " + std::to_string(d_));
  }
  for (double v : r) {
    if (!std::isfinite(v)) throw Error(ErrorCode::kInvalidArgument, "non-finite value in appended row");
  }
  values_.insert(values_.end(), r.begin(), r.end());
  ++n_;
}

void PointSet::check_finite() const {
  for (std::size_t k = 0; k < values_.size(); ++k) {
    if (!std::isfinite(values_[k])) {
      throw Error(ErrorCode::kInvalidArgument, "non-finite value at row " + std::to_string(k / d_) +
                                                   ", column " + std::to_string(k % d_));
    }
  }
}

void LabeledDataset::check_aligned() const {
  if (sources.size() != targets.size() || sources.dim() != targets.dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "labeled pairs misaligned: sources " + std::to_string(sources.size()) + "x" +
                    std::to_string(sources.dim()) + ", targets " + std::to_string(targets.size()) + "x" +
                    std::to_string(targets.dim()));
  }
}

}  // namespace gtn
