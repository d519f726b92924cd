#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "gtn/point_set.hpp"
#include "gtn/rng.hpp"

namespace gtn {

struct MlpConfig {
  std::size_t input_dim = 1;
  std::size_t output_dim = 1;
  std::size_t hidden_layers = 4;
  std::size_t width = 6;
  double leaky_slope = 0.5;
  bool batch_norm = false;
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const MlpConfig&, const MlpConfig&) = default;
};

/// Diagonal Gaussian mixture the generator draws its inputs from. Models
/// trained on cluster-wise labels carry one; all others use N(0, I).
struct GaussianMixtureSource {
  std::vector<double> weights;
  PointSet means;  // k×d
  PointSet stds;   // k×d

  friend bool operator==(const GaussianMixtureSource&, const GaussianMixtureSource&) = default;
};

inline constexpr double kBatchNormMomentum = 0.9;
inline constexpr double kBatchNormEpsilon = 1e-5;

/// Feedforward generator network.
///
/// Each hidden layer is affine -> LeakyReLU -> (optional) batch norm; the
/// output layer is affine with no activation, plus a fixed per-coordinate
/// offset (the training-target mean). Trainable parameters live in one flat
/// buffer, layer by layer: W (out×in, row-major), b, then gamma and beta when
/// batch norm is on. Running batch-norm statistics are kept separately since
/// they are not trained by gradient descent.
class MlpModel {
 public:
  using VectorView = Eigen::Map<Eigen::VectorXd>;
  using ConstVectorView = Eigen::Map<const Eigen::VectorXd>;

  MlpModel() = default;
  explicit MlpModel(const MlpConfig& config);

  const MlpConfig& config() const noexcept { return config_; }
  /// Hidden layers plus the output layer.
  std::size_t layer_count() const noexcept { return layers_.size(); }
  std::size_t in_dim(std::size_t layer) const { return layers_[layer].in; }
  std::size_t out_dim(std::size_t layer) const { return layers_[layer].out; }
  bool is_hidden(std::size_t layer) const noexcept { return layer + 1 < layers_.size(); }
  bool has_batch_norm(std::size_t layer) const noexcept { return config_.batch_norm && is_hidden(layer); }

  std::span<double> parameters() noexcept { return params_; }
  std::span<const double> parameters() const noexcept { return params_; }
  std::size_t parameter_count() const noexcept { return params_.size(); }

  MutableMatrixView weights(std::size_t layer);
  MatrixView weights(std::size_t layer) const;
  VectorView bias(std::size_t layer);
  ConstVectorView bias(std::size_t layer) const;
  VectorView bn_scale(std::size_t layer);
  ConstVectorView bn_scale(std::size_t layer) const;
  VectorView bn_shift(std::size_t layer);
  ConstVectorView bn_shift(std::size_t layer) const;
  VectorView running_mean(std::size_t layer);
  ConstVectorView running_mean(std::size_t layer) const;
  VectorView running_var(std::size_t layer);
  ConstVectorView running_var(std::size_t layer) const;

  /// Running mean and variance of every batch-norm layer, concatenated.
  std::span<double> running_stats() noexcept { return running_; }
  std::span<const double> running_stats() const noexcept { return running_; }

  std::vector<double>& output_offset() noexcept { return output_offset_; }
  const std::vector<double>& output_offset() const noexcept { return output_offset_; }

  std::optional<GaussianMixtureSource>& source() noexcept { return source_; }
  const std::optional<GaussianMixtureSource>& source() const noexcept { return source_; }

  bool train_mode = false;

 private:
  struct LayerLayout {
    std::size_t in = 0;
    std::size_t out = 0;
    std::size_t weight_offset = 0;
    std::size_t bias_offset = 0;
    std::size_t scale_offset = 0;
    std::size_t shift_offset = 0;
    std::size_t running_offset = 0;
  };

  MlpConfig config_;
  std::vector<LayerLayout> layers_;
  std::vector<double> params_;
  std::vector<double> running_;
  std::vector<double> output_offset_;
  std::optional<GaussianMixtureSource> source_;
};

/// Fresh model: Kaiming-uniform weights scaled for the leaky slope
/// (bound sqrt(6 / ((1 + slope^2) fan_in))), zero biases, batch-norm scale 1
/// and shift 0, running mean 0 and variance 1.
MlpModel init_model(const MlpConfig& config, Rng& rng);

/// Network output for every row of `batch`. In train mode batch norm uses the
/// batch's own statistics; otherwise the running averages. Never mutates.
PointSet forward(const MlpModel& model, const PointSet& batch);

/// Train-mode forward that also folds the batch statistics into the running
/// averages.
PointSet forward_and_update(MlpModel& model, const PointSet& batch);

/// (1/n) sum_i |pred_i - target_i|^2.
double mse_loss(const PointSet& pred, const PointSet& target);

struct Gradients {
  double loss = 0.0;
  /// Same layout as MlpModel::parameters().
  std::vector<double> values;
  /// Per batch-norm layer batch mean and biased variance, in running_stats()
  /// layout; empty without batch norm or outside train mode.
  std::vector<double> batch_stats;
};

/// Exact gradient of mse_loss(forward(model, batch), target) with respect to
/// every trainable parameter, in the model's current mode.
Gradients backward(const MlpModel& model, const PointSet& batch, const PointSet& target);

/// Blends batch statistics from backward() into the running averages,
/// storing the unbiased variance estimate.
void update_running_stats(MlpModel& model, const Gradients& grads, std::size_t batch_size);

}  // namespace gtn
