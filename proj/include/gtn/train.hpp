#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "json.hpp"

#include "gtn/mlp.hpp"
#include "gtn/point_set.hpp"
#include "gtn/rng.hpp"

namespace gtn {

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 250;
  std::size_t max_epochs = 500;
  std::size_t patience = 20;
  double val_fraction = 0.1;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;

  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
  bool stopped_early = false;

  /// Non-finite losses are written as null.
  nlohmann::json to_json() const;
};

struct TrainResult {
  MlpModel model;
  TrainHistory history;
};

/// Mini-batch Adam on the MSE between network outputs and targets.
///
/// The output offset is set to the mean of the training targets before the
/// first step, so the layers fit centered targets. Without an explicit
/// `validation` set, a seeded val_fraction of the pairs is held out. Rows are
/// reshuffled every epoch; a trailing partial batch is kept unless batch norm
/// is on. Training stops after `patience` epochs without a strictly lower
/// validation MSE, or at max_epochs, and the best-validation weights (and
/// running statistics) are restored. The returned model is in inference mode.
TrainResult train(MlpModel model, const LabeledDataset& labeled, const TrainConfig& tcfg, Rng& rng,
                  const std::optional<LabeledDataset>& validation = std::nullopt);

struct GeneratedSample {
  PointSet sources;
  PointSet outputs;
};

/// Draws n inputs from the model's source distribution (N(0, I) unless the
/// model carries a Gaussian mixture) and pushes them through the network in
/// inference mode.
GeneratedSample generate_with_sources(const MlpModel& model, Rng& rng, std::size_t n);
PointSet generate(const MlpModel& model, Rng& rng, std::size_t n);

/// Network output in inference mode regardless of model.train_mode.
PointSet predict(const MlpModel& model, const PointSet& inputs);

}  // namespace gtn
