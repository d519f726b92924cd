#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "gtn/labeling.hpp"
#include "gtn/metrics_report.hpp"
#include "gtn/mlp.hpp"
#include "gtn/plot.hpp"
#include "gtn/synth.hpp"
#include "gtn/train.hpp"

namespace gtn {

inline constexpr const char* kSoftwareVersion = "0.1.0";

enum class Experiment { kSwiss1d, kUniform2d, kDisjointUniform, kCustom };

Experiment parse_experiment(const std::string& name);
std::string experiment_name(Experiment e);

struct ExperimentConfig {
  Experiment experiment = Experiment::kSwiss1d;
  std::size_t n_train = 50'000;
  std::size_t n_val = 10'000;
  std::size_t n_generate = 10'000;
  std::uint64_t seed = 7;
  MlpConfig mlp;
  TrainConfig train;
  std::optional<std::size_t> clusters;
  bool rescale = false;
  /// Cosine tie tolerance for greedy labeling.
  double tie_tolerance = kDefaultLabelTieTolerance;
  std::optional<std::filesystem::path> data_path;
  std::filesystem::path out_dir = "gtn_out";
  ImageFormat plot_format = ImageFormat::kPng;

  /// Throws Error(kConfig) naming the offending field.
  void validate() const;

  nlohmann::json to_json() const;
  /// Missing keys keep the preset defaults of the named experiment.
  static ExperimentConfig from_json(const nlohmann::json& j);
};

/// Default recipe for each preset: sample sizes and network shapes of the
/// reference experiments (swiss1d: 50k, 4x6; uniform2d: 100k, 6x6; disjoint:
/// 20k two boxes, k = 2), LeakyReLU(0.5), Adam at 1e-3, batch 250. The 2D
/// presets train with patience 200 for at most 2000 epochs.
ExperimentConfig preset_config(Experiment e);

/// Boxes used by the disjoint_uniform preset.
DisjointUniformSpec disjoint_preset_spec();

struct RunManifest {
  ExperimentConfig config;
  std::string software_version = kSoftwareVersion;
  std::map<std::string, double> timings_ms;
  std::map<std::string, std::filesystem::path> outputs;
  MetricsReport metrics;
  TrainHistory history;

  nlohmann::json to_json() const;
};

/// generate data -> label -> train -> sample -> evaluate, writing samples.csv,
/// pairs.csv, model.bin, history.json, metrics.json, manifest.json and
/// plot.{png,svg} into config.out_dir.
RunManifest cmd_run(const ExperimentConfig& config);

struct LabelOptions {
  std::uint64_t seed = 7;
  std::optional<std::size_t> clusters;
  bool rescale = false;
  double tie_tolerance = kDefaultLabelTieTolerance;
  /// Subsample the data to at most this many rows before labeling (0 = all).
  std::size_t max_rows = 0;
};

/// Reads data, draws a matching normal sample, labels it (rank matching for
/// 1D data, greedy cosine otherwise, per cluster when requested) and writes
/// the pairs CSV. Returns the number of pairs.
std::size_t cmd_label(const std::filesystem::path& data_csv, const std::filesystem::path& out_csv,
                      const LabelOptions& options);

struct TrainOptions {
  MlpConfig mlp;
  TrainConfig train;
  std::uint64_t seed = 7;
};

/// Trains on a pairs CSV and writes model.bin and history.json into out_dir.
/// A cluster column makes the model's source a Gaussian mixture estimated
/// from each cluster's sources.
TrainHistory cmd_train(const std::filesystem::path& pairs_csv, const std::filesystem::path& out_dir,
                       const TrainOptions& options);

/// Writes n generated vectors (header x0..x{d-1}).
std::filesystem::path cmd_sample(const std::filesystem::path& model_path, std::size_t n, std::uint64_t seed,
                                 const std::filesystem::path& out_csv);

struct EvalOptions {
  Experiment experiment = Experiment::kCustom;
  std::filesystem::path generated_csv;
  std::optional<std::filesystem::path> reference_csv;
  std::optional<std::filesystem::path> model_path;
  std::filesystem::path out_json;
  std::uint64_t seed = 7;
};

/// Metric battery per preset, written as JSON:
///  swiss1d: ks_theta, monotonicity_violations, ood_fraction, ...
///  uniform2d: chi_square, inside_fraction, energy_distance, coverage, ...
///  disjoint_uniform: in_support_fraction, box proportions, energy_distance
///  custom: energy_distance, ks_max_marginal (needs a reference CSV)
/// Presets draw a fresh reference sample when none is given.
MetricsReport cmd_eval(const EvalOptions& options);

enum class PlotStyle { kAuto, kScatter, kSwiss };
PlotStyle parse_plot_style(const std::string& name);

/// Scatter plot of a points or pairs CSV. Pairs files are drawn by their x
/// columns and colored by |y|; kSwiss maps 1D theta through the swiss-roll
/// embedding first. 1D data without sources is drawn as its empirical CDF.
/// Data with more than two columns needs `columns` to pick two of them.
std::filesystem::path cmd_plot(const std::filesystem::path& samples_csv, const std::filesystem::path& out_image,
                               PlotStyle style, std::optional<std::pair<std::size_t, std::size_t>> columns = {});

// Metric batteries shared by run and eval.
MetricsReport evaluate_swiss(const PointSet& generated_theta, const PointSet& reference_theta,
                             const MlpModel* model, std::uint64_t seed);
MetricsReport evaluate_uniform2d(const PointSet& generated, const PointSet& reference, std::uint64_t seed);
MetricsReport evaluate_disjoint(const PointSet& generated, const PointSet& reference,
                                const DisjointUniformSpec& spec, std::uint64_t seed);
MetricsReport evaluate_custom(const PointSet& generated, const PointSet& reference, std::uint64_t seed);

/// Distance beyond which a generated swiss-roll point counts as off-manifold.
inline constexpr double kSwissOodThreshold = 0.05;

}  // namespace gtn
