#include "gtn/mlp.hpp"

#include <cmath>
#include <string>

#include "gtn/error.hpp"

namespace gtn {

namespace {

using Matrix = RowMatrix;
using Vector = Eigen::VectorXd;

struct LayerCache {
  Matrix input;
  Matrix pre;     // affine output
  Matrix normed;  // xhat, batch-norm layers only
  Vector inv_std;
};

struct ForwardPass {
  std::vector<LayerCache> layers;
  Matrix output;
  std::vector<double> batch_stats;
};

double leaky(double z, double slope) { return z > 0.0 ? z : slope * z; }

ForwardPass run_forward(const MlpModel& model, const PointSet& batch, bool batch_statistics) {
  const auto& cfg = model.config();
  if (batch.dim() != cfg.input_dim) {
    throw Error(ErrorCode::kDimensionMismatch, "forward: input dimension " + std::to_string(batch.dim()) +
                                                   " does not match model input_dim " +
                                                   std::to_string(cfg.input_dim));
  }
  const auto n = static_cast<Eigen::Index>(batch.size());
  if (batch_statistics && cfg.batch_norm && n < 2) {
    throw Error(ErrorCode::kInvalidArgument, "batch norm in train mode needs at least 2 rows per batch");
  }

  ForwardPass pass;
  pass.layers.resize(model.layer_count());
  if (batch_statistics && cfg.batch_norm) pass.batch_stats.assign(model.running_stats().size(), 0.0);

  Matrix activation = batch.matrix();
  std::size_t stats_cursor = 0;
  for (std::size_t l = 0; l < model.layer_count(); ++l) {
    auto& cache = pass.layers[l];
    cache.input = std::move(activation);
    cache.pre = cache.input * model.weights(l).transpose();
    cache.pre.rowwise() += model.bias(l).transpose();
    if (!model.is_hidden(l)) {
      activation = cache.pre;
      break;
    }
    activation = cache.pre.unaryExpr([&](double z) { return leaky(z, cfg.leaky_slope); });
    if (!model.has_batch_norm(l)) continue;

    const auto width = model.out_dim(l);
    Vector mean;
    Vector var;
    if (batch_statistics) {
      mean = activation.colwise().mean().transpose();
      var = (activation.rowwise() - mean.transpose()).array().square().colwise().mean().transpose();
      for (std::size_t j = 0; j < width; ++j) {
        pass.batch_stats[stats_cursor + j] = mean[j];
        pass.batch_stats[stats_cursor + width + j] = var[j];
      }
    } else {
      mean = model.running_mean(l);
      var = model.running_var(l);
    }
    stats_cursor += 2 * width;
    cache.inv_std = (var.array() + kBatchNormEpsilon).rsqrt().matrix();
    cache.normed = (activation.rowwise() - mean.transpose()).array().rowwise() * cache.inv_std.transpose().array();
    activation = (cache.normed.array().rowwise() * model.bn_scale(l).transpose().array()).matrix();
    activation.rowwise() += model.bn_shift(l).transpose();
  }

  const auto& offset = model.output_offset();
  for (Eigen::Index j = 0; j < activation.cols(); ++j) activation.col(j).array() += offset[static_cast<std::size_t>(j)];
  pass.output = std::move(activation);
  return pass;
}

}  // namespace

void MlpConfig::validate() const {
  if (input_dim == 0 || output_dim == 0) throw Error(ErrorCode::kConfig, "mlp: input_dim and output_dim must be >= 1");
  if (hidden_layers == 0) throw Error(ErrorCode::kConfig, "mlp: hidden_layers must be >= 1");
  if (width == 0) throw Error(ErrorCode::kConfig, "mlp: width must be >= 1");
  if (!(leaky_slope >= 0.0 && leaky_slope <= 1.0)) throw Error(ErrorCode::kConfig, "mlp: leaky_slope must lie in [0, 1]");
}

MlpModel::MlpModel(const MlpConfig& config) : config_(config) {
  config_.validate();
  std::size_t cursor = 0;
  std::size_t running_cursor = 0;
  for (std::size_t l = 0; l <= config_.hidden_layers; ++l) {
    LayerLayout layout;
    layout.in = l == 0 ? config_.input_dim : config_.width;
    layout.out = l == config_.hidden_layers ? config_.output_dim : config_.width;
    layout.weight_offset = cursor;
    cursor += layout.in * layout.out;
    layout.bias_offset = cursor;
    cursor += layout.out;
    if (config_.batch_norm && l < config_.hidden_layers) {
      layout.scale_offset = cursor;
      cursor += layout.out;
      layout.shift_offset = cursor;
      cursor += layout.out;
      layout.running_offset = running_cursor;
      running_cursor += 2 * layout.out;
    }
    layers_.push_back(layout);
  }
  params_.assign(cursor, 0.0);
  running_.assign(running_cursor, 0.0);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (!has_batch_norm(l)) continue;
    bn_scale(l).setOnes();
    running_var(l).setOnes();
  }
  output_offset_.assign(config_.output_dim, 0.0);
}

MutableMatrixView MlpModel::weights(std::size_t l) {
  const auto& L = layers_[l];
  return {params_.data() + L.weight_offset, static_cast<Eigen::Index>(L.out), static_cast<Eigen::Index>(L.in)};
}
MatrixView MlpModel::weights(std::size_t l) const {
  const auto& L = layers_[l];
  return {params_.data() + L.weight_offset, static_cast<Eigen::Index>(L.out), static_cast<Eigen::Index>(L.in)};
}
MlpModel::VectorView MlpModel::bias(std::size_t l) {
  return {params_.data() + layers_[l].bias_offset, static_cast<Eigen::Index>(layers_[l].out)};
}
MlpModel::ConstVectorView MlpModel::bias(std::size_t l) const {
  return {params_.data() + layers_[l].bias_offset, static_cast<Eigen::Index>(layers_[l].out)};
}
MlpModel::VectorView MlpModel::bn_scale(std::size_t l) {
  return {params_.data() + layers_[l].scale_offset, static_cast<Eigen::Index>(layers_[l].out)};
}
MlpModel::ConstVectorView MlpModel::bn_scale(std::size_t l) const {
  return {params_.data() + layers_[l].scale_offset, static_cast<Eigen::Index>(layers_[l].out)};
}
MlpModel::VectorView MlpModel::bn_shift(std::size_t l) {
  return {params_.data() + layers_[l].shift_offset, static_cast<Eigen::Index>(layers_[l].out)};
}
MlpModel::ConstVectorView MlpModel::bn_shift(std::size_t l) const {
  return {params_.data() + layers_[l].shift_offset, static_cast<Eigen::Index>(layers_[l].out)};
}
MlpModel::VectorView MlpModel::running_mean(std::size_t l) {
  return {running_.data() + layers_[l].running_offset, static_cast<Eigen::Index>(layers_[l].out)};
}
MlpModel::ConstVectorView MlpModel::running_mean(std::size_t l) const {
  return {running_.data() + layers_[l].running_offset, static_cast<Eigen::Index>(layers_[l].out)};
}
MlpModel::VectorView MlpModel::running_var(std::size_t l) {
  return {running_.data() + layers_[l].running_offset + layers_[l].out, static_cast<Eigen::Index>(layers_[l].out)};
}
MlpModel::ConstVectorView MlpModel::running_var(std::size_t l) const {
  return {running_.data() + layers_[l].running_offset + layers_[l].out, static_cast<Eigen::Index>(layers_[l].out)};
}

MlpModel init_model(const MlpConfig& config, Rng& rng) {
  MlpModel model(config);
  const double gain_denominator = 1.0 + config.leaky_slope * config.leaky_slope;
  for (std::size_t l = 0; l < model.layer_count(); ++l) {
    const double bound = std::sqrt(6.0 / (gain_denominator * static_cast<double>(model.in_dim(l))));
    auto w = model.weights(l);
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-bound, bound);
    }
  }
  return model;
}

PointSet forward(const MlpModel& model, const PointSet& batch) {
  return PointSet::from_matrix(run_forward(model, batch, model.train_mode).output);
}

PointSet forward_and_update(MlpModel& model, const PointSet& batch) {
  auto pass = run_forward(model, batch, true);
  if (!pass.batch_stats.empty()) {
    Gradients stats;
    stats.batch_stats = std::move(pass.batch_stats);
    update_running_stats(model, stats, batch.size());
  }
  return PointSet::from_matrix(pass.output);
}

double mse_loss(const PointSet& pred, const PointSet& target) {
  if (pred.size() != target.size() || pred.dim() != target.dim()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "mse_loss: prediction is " + std::to_string(pred.size()) + "x" + std::to_string(pred.dim()) +
                    ", target is " + std::to_string(target.size()) + "x" + std::to_string(target.dim()));
  }
  if (pred.empty()) return 0.0;
  return (pred.matrix() - target.matrix()).squaredNorm() / static_cast<double>(pred.size());
}

Gradients backward(const MlpModel& model, const PointSet& batch, const PointSet& target) {
  if (target.size() != batch.size() || target.dim() != model.config().output_dim) {
    throw Error(ErrorCode::kDimensionMismatch, "backward: target shape does not match batch and model output");
  }
  const bool batch_statistics = model.train_mode;
  const auto pass = run_forward(model, batch, batch_statistics);
  const double n = static_cast<double>(batch.size());
  const double slope = model.config().leaky_slope;

  Gradients grads;
  grads.values.assign(model.parameter_count(), 0.0);
  grads.batch_stats = pass.batch_stats;

  const Matrix residual = pass.output - target.matrix();
  grads.loss = residual.squaredNorm() / n;
  Matrix upstream = (2.0 / n) * residual;

  // Scratch model sharing the gradient buffer's layout.
  MlpModel g(model.config());
  for (std::size_t l = model.layer_count(); l-- > 0;) {
    const auto& cache = pass.layers[l];
    Matrix d_pre;
    if (!model.is_hidden(l)) {
      d_pre = std::move(upstream);
    } else {
      Matrix d_act;
      if (model.has_batch_norm(l)) {
        g.bn_scale(l) = (upstream.array() * cache.normed.array()).colwise().sum().transpose();
        g.bn_shift(l) = upstream.colwise().sum().transpose();
        const Matrix d_normed = upstream.array().rowwise() * model.bn_scale(l).transpose().array();
        if (batch_statistics) {
          const Eigen::RowVectorXd mean_d = d_normed.colwise().mean();
          const Eigen::RowVectorXd mean_dx = (d_normed.array() * cache.normed.array()).colwise().mean();
          Matrix centered = d_normed.rowwise() - mean_d;
          centered -= (cache.normed.array().rowwise() * mean_dx.array()).matrix();
          d_act = centered.array().rowwise() * cache.inv_std.transpose().array();
        } else {
          d_act = d_normed.array().rowwise() * cache.inv_std.transpose().array();
        }
      } else {
        d_act = std::move(upstream);
      }
      d_pre = d_act.array() * cache.pre.unaryExpr([&](double z) { return z > 0.0 ? 1.0 : slope; }).array();
    }
    g.weights(l) = d_pre.transpose() * cache.input;
    g.bias(l) = d_pre.colwise().sum().transpose();
    if (l > 0) upstream = d_pre * model.weights(l);
  }
  const auto flat = g.parameters();
  grads.values.assign(flat.begin(), flat.end());
  return grads;
}

void update_running_stats(MlpModel& model, const Gradients& grads, std::size_t batch_size) {
  if (grads.batch_stats.empty()) return;
  const double n = static_cast<double>(batch_size);
  const double unbias = batch_size > 1 ? n / (n - 1.0) : 1.0;
  for (std::size_t l = 0; l < model.layer_count(); ++l) {
    if (!model.has_batch_norm(l)) continue;
    auto mean = model.running_mean(l);
    auto var = model.running_var(l);
    // running_mean and running_var are contiguous in the running buffer, matching batch_stats.
    const std::size_t base = static_cast<std::size_t>(mean.data() - model.running_stats().data());
    const auto width = static_cast<Eigen::Index>(model.out_dim(l));
    for (Eigen::Index j = 0; j < width; ++j) {
      const double bm = grads.batch_stats[base + static_cast<std::size_t>(j)];
      const double bv = grads.batch_stats[base + static_cast<std::size_t>(width + j)];
      mean[j] = kBatchNormMomentum * mean[j] + (1.0 - kBatchNormMomentum) * bm;
      var[j] = kBatchNormMomentum * var[j] + (1.0 - kBatchNormMomentum) * bv * unbias;
    }
  }
}

}  // namespace gtn
