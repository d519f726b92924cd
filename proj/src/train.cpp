#include "gtn/train.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "gtn/error.hpp"
#include "gtn/numeric.hpp"

namespace gtn {

namespace {

class Adam {
 public:
  Adam(std::size_t size, const TrainConfig& cfg) : cfg_(cfg), m_(size, 0.0), v_(size, 0.0) {}

  void step(std::span<double> params, std::span<const double> grads) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.adam_beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.adam_beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = cfg_.adam_beta1 * m_[i] + (1.0 - cfg_.adam_beta1) * grads[i];
      v_[i] = cfg_.adam_beta2 * v_[i] + (1.0 - cfg_.adam_beta2) * grads[i] * grads[i];
      const double m_hat = m_[i] / c1;
      const double v_hat = v_[i] / c2;
      params[i] -= cfg_.learning_rate * m_hat / (std::sqrt(v_hat) + cfg_.adam_epsilon);
    }
  }

 private:
  TrainConfig cfg_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::size_t t_ = 0;
};

nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw Error(ErrorCode::kConfig, "train: learning_rate must be > 0");
  if (batch_size == 0) throw Error(ErrorCode::kConfig, "train: batch_size must be >= 1");
  if (max_epochs == 0) throw Error(ErrorCode::kConfig, "train: max_epochs must be >= 1");
  if (patience == 0) throw Error(ErrorCode::kConfig, "train: patience must be >= 1");
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw Error(ErrorCode::kConfig, "train: val_fraction must lie in (0, 1)");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw Error(ErrorCode::kConfig, "train: adam betas must lie in [0, 1)");
  }
  if (!(adam_epsilon > 0.0)) throw Error(ErrorCode::kConfig, "train: adam_epsilon must be > 0");
}

nlohmann::json TrainHistory::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& e : epochs) {
    rows.push_back({{"epoch", e.epoch}, {"train_loss", finite_or_null(e.train_loss)}, {"val_loss", finite_or_null(e.val_loss)}});
  }
  return {{"epochs", rows},
          {"best_epoch", best_epoch},
          {"best_val_loss", finite_or_null(best_val_loss)},
          {"stopped_early", stopped_early}};
}

TrainResult train(MlpModel model, const LabeledDataset& labeled, const TrainConfig& tcfg, Rng& rng,
                  const std::optional<LabeledDataset>& validation) {
  tcfg.validate();
  labeled.check_aligned();
  const auto& mcfg = model.config();
  if (labeled.sources.dim() != mcfg.input_dim || labeled.targets.dim() != mcfg.output_dim) {
    throw Error(ErrorCode::kDimensionMismatch,
                "train: pairs are " + std::to_string(labeled.sources.dim()) + "->" +
                    std::to_string(labeled.targets.dim()) + " but the model maps " + std::to_string(mcfg.input_dim) +
                    "->" + std::to_string(mcfg.output_dim));
  }
  if (labeled.size() < 2 * tcfg.batch_size) {
    throw Error(ErrorCode::kInvalidArgument, "train: " + std::to_string(labeled.size()) +
                                                 " pairs is fewer than two batches of " +
                                                 std::to_string(tcfg.batch_size));
  }

  LabeledDataset train_set;
  LabeledDataset val_set;
  if (validation) {
    validation->check_aligned();
    if (validation->sources.dim() != mcfg.input_dim || validation->targets.dim() != mcfg.output_dim) {
      throw Error(ErrorCode::kDimensionMismatch, "train: validation pairs do not match model dimensions");
    }
    if (validation->size() == 0) throw Error(ErrorCode::kEmptyData, "train: validation set is empty");
    train_set = labeled;
    val_set = *validation;
  } else {
    const auto perm = random_permutation(rng, labeled.size());
    auto n_val = static_cast<std::size_t>(std::llround(tcfg.val_fraction * static_cast<double>(labeled.size())));
    n_val = std::clamp<std::size_t>(n_val, 1, labeled.size() - 1);
    const std::span<const std::size_t> all(perm);
    const auto val_idx = all.first(n_val);
    const auto train_idx = all.subspan(n_val);
    val_set = {labeled.sources.select(val_idx), labeled.targets.select(val_idx)};
    train_set = {labeled.sources.select(train_idx), labeled.targets.select(train_idx)};
  }

  model.output_offset() = column_means(train_set.targets);

  const std::size_t n = train_set.size();
  const std::size_t d_in = mcfg.input_dim;
  const std::size_t d_out = mcfg.output_dim;
  Adam adam(model.parameter_count(), tcfg);

  TrainHistory history;
  history.best_val_loss = std::numeric_limits<double>::infinity();
  std::vector<double> best_params(model.parameters().begin(), model.parameters().end());
  std::vector<double> best_running(model.running_stats().begin(), model.running_stats().end());
  std::size_t epochs_since_best = 0;

  PointSet batch_x(0, d_in);
  PointSet batch_y(0, d_out);
  for (std::size_t epoch = 1; epoch <= tcfg.max_epochs; ++epoch) {
    model.train_mode = true;
    const auto perm = random_permutation(rng, n);
    double loss_sum = 0.0;
    std::size_t rows_seen = 0;
    for (std::size_t start = 0; start < n; start += tcfg.batch_size) {
      const std::size_t len = std::min(tcfg.batch_size, n - start);
      if (mcfg.batch_norm && len < tcfg.batch_size) break;
      const std::span<const std::size_t> idx(perm.data() + start, len);
      batch_x = train_set.sources.select(idx);
      batch_y = train_set.targets.select(idx);
      const auto grads = backward(model, batch_x, batch_y);
      update_running_stats(model, grads, len);
      adam.step(model.parameters(), grads.values);
      loss_sum += grads.loss * static_cast<double>(len);
      rows_seen += len;
    }
    model.train_mode = false;

    EpochRecord record{epoch, loss_sum / static_cast<double>(rows_seen), 0.0};
    record.val_loss = mse_loss(forward(model, val_set.sources), val_set.targets);
    history.epochs.push_back(record);

    if (std::isfinite(record.val_loss) && record.val_loss < history.best_val_loss) {
      history.best_val_loss = record.val_loss;
      history.best_epoch = epoch;
      best_params.assign(model.parameters().begin(), model.parameters().end());
      best_running.assign(model.running_stats().begin(), model.running_stats().end());
      epochs_since_best = 0;
    } else if (++epochs_since_best >= tcfg.patience) {
      history.stopped_early = epoch < tcfg.max_epochs;
      break;
    }
  }

  std::copy(best_params.begin(), best_params.end(), model.parameters().begin());
  std::copy(best_running.begin(), best_running.end(), model.running_stats().begin());
  model.train_mode = false;
  return {std::move(model), std::move(history)};
}

PointSet predict(const MlpModel& model, const PointSet& inputs) {
  if (!model.train_mode) return forward(model, inputs);
  MlpModel inference = model;
  inference.train_mode = false;
  return forward(inference, inputs);
}

GeneratedSample generate_with_sources(const MlpModel& model, Rng& rng, std::size_t n) {
  const std::size_t d = model.config().input_dim;
  PointSet sources(n, d);
  if (const auto& mix = model.source()) {
    for (std::size_t i = 0; i < n; ++i) {
      const double u = rng.uniform01();
      std::size_t c = mix->weights.size() - 1;
      double cumulative = 0.0;
      for (std::size_t k = 0; k < mix->weights.size(); ++k) {
        cumulative += mix->weights[k];
        if (u < cumulative) {
          c = k;
          break;
        }
      }
      auto r = sources.row(i);
      for (std::size_t j = 0; j < d; ++j) r[j] = mix->means(c, j) + mix->stds(c, j) * rng.normal();
    }
  } else {
    sources = sample_standard_normal(rng, n, d);
  }
  if (n == 0) return {std::move(sources), PointSet(0, model.config().output_dim)};
  auto outputs = predict(model, sources);
  return {std::move(sources), std::move(outputs)};
}

PointSet generate(const MlpModel& model, Rng& rng, std::size_t n) {
  return generate_with_sources(model, rng, n).outputs;
}

}  // namespace gtn
