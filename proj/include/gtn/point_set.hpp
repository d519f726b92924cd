#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace gtn {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixView = Eigen::Map<const RowMatrix>;
using MutableMatrixView = Eigen::Map<RowMatrix>;

/// Dense n×d block of finite sample vectors stored row-major.
///
/// The dimension is fixed at construction and is at least 1; an empty set
/// (n == 0) still carries its dimension so downstream shapes stay checkable.
class PointSet {
 public:
  PointSet() = default;

  /// n rows of zeros.
  PointSet(std::size_t n, std::size_t d);

  /// Takes ownership of row-major `values`; throws if the size is not a
  /// multiple of d or any entry is non-finite.
  PointSet(std::size_t d, std::vector<double> values);

  static PointSet from_rows(const std::vector<std::vector<double>>& rows);
  static PointSet from_matrix(const RowMatrix& m);

  std::size_t size() const noexcept { return n_; }
  std::size_t dim() const noexcept { return d_; }
  bool empty() const noexcept { return n_ == 0; }

  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * d_, d_};
  }
  std::span<double> row(std::size_t i) { return {values_.data() + i * d_, d_}; }

  double operator()(std::size_t i, std::size_t j) const { return values_[i * d_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return values_[i * d_ + j]; }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  MatrixView matrix() const {
    return MatrixView(values_.data(), static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(d_));
  }
  MutableMatrixView matrix() {
    return MutableMatrixView(values_.data(), static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(d_));
  }

  /// Rows picked by index, in the given order.
  PointSet select(std::span<const std::size_t> indices) const;

  /// Column `j` as a vector.
  std::vector<double> column(std::size_t j) const;

  void append_row(std::span<const double> r);

  /// Throws if any entry is NaN or infinite.
  void check_finite() const;

  friend bool operator==(const PointSet&, const PointSet&) = default;

 private:
  std::size_t n_ = 0;
  std::size_t d_ = 0;
  std::vector<double> values_;
};

/// Aligned (source, target) training pairs for the generator network.
struct LabeledDataset {
  PointSet sources;
  PointSet targets;

  std::size_t size() const noexcept { return sources.size(); }

  /// Throws unless sources and targets have identical shape.
  void check_aligned() const;
};

}  // namespace gtn
