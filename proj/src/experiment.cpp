#include "gtn/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "gtn/csv.hpp"
#include "gtn/error.hpp"
#include "gtn/eval.hpp"
#include "gtn/kmeans.hpp"
#include "gtn/labeling.hpp"
#include "gtn/model_io.hpp"
#include "gtn/numeric.hpp"

namespace gtn {

namespace {

// Stream ids for Rng::split; shared by run and the single-step subcommands so
// that e.g. `sample --seed s` reproduces the samples of `run --seed s`.
enum Stream : std::uint64_t {
  kDataStream = 1,
  kSourceStream = 2,
  kValidationStream = 3,
  kInitStream = 4,
  kTrainStream = 5,
  kGenerateStream = 6,
  kReferenceStream = 7,
  kClusterStream = 8,
};

constexpr std::size_t kSwissManifoldGrid = 10'000;
constexpr std::size_t kCoverageHeldOut = 1'000;
constexpr double kCoverageRadius = 0.05;
constexpr double kSupportMargin = 0.05;

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

void require(bool ok, const std::string& field, const std::string& message) {
  if (!ok) throw Error(ErrorCode::kConfig, "config field '" + field + "': " + message);
}

template <typename T>
void read_if(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key) || j.at(key).is_null()) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::kConfig, std::string("config field '") + key + "' has the wrong type");
  }
}

GaussianMixtureSource mixture_from_clusters(const ClusterModel& clusters) {
  return {clusters.weights, clusters.centers, clusters.stds};
}

/// Mixture source estimated from the sources of each cluster's pairs.
GaussianMixtureSource mixture_from_pairs(const LabeledDataset& pairs, const std::vector<std::size_t>& clusters) {
  const std::size_t k = *std::max_element(clusters.begin(), clusters.end()) + 1;
  const std::size_t d = pairs.sources.dim();
  GaussianMixtureSource mix{std::vector<double>(k, 0.0), PointSet(k, d), PointSet(k, d)};
  for (std::size_t c = 0; c < k; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < clusters.size(); ++i) {
      if (clusters[i] == c) members.push_back(i);
    }
    if (members.empty()) throw Error(ErrorCode::kParse, "pairs file skips cluster index " + std::to_string(c));
    const PointSet ys = pairs.sources.select(members);
    const auto mean = column_means(ys);
    const auto sd = column_stddevs(ys);
    std::copy(mean.begin(), mean.end(), mix.means.row(c).begin());
    std::copy(sd.begin(), sd.end(), mix.stds.row(c).begin());
    mix.weights[c] = static_cast<double>(members.size()) / static_cast<double>(clusters.size());
  }
  return mix;
}

double fraction_in_box(const PointSet& points, const UniformBoxSpec& box, double margin) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < points.size(); ++i) hits += box.contains(points.row(i), margin) ? 1 : 0;
  return points.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(points.size());
}

double distance_to_box(std::span<const double> p, const UniformBoxSpec& box) {
  double d2 = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    const double gap = std::max({box.lows[j] - p[j], 0.0, p[j] - box.highs[j]});
    d2 += gap * gap;
  }
  return std::sqrt(d2);
}

std::vector<double> box_proportions(const PointSet& points, const DisjointUniformSpec& spec) {
  std::vector<double> counts(spec.boxes.size(), 0.0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::size_t best = 0;
    double best_d = distance_to_box(points.row(i), spec.boxes[0]);
    for (std::size_t b = 1; b < spec.boxes.size(); ++b) {
      const double dist = distance_to_box(points.row(i), spec.boxes[b]);
      if (dist < best_d) {
        best_d = dist;
        best = b;
      }
    }
    counts[best] += 1.0;
  }
  for (double& c : counts) c /= static_cast<double>(points.size());
  return counts;
}

/// Labeled data, validation pairs and evaluation reference for one run.
struct PreparedData {
  LabeledDataset pairs;
  std::optional<std::vector<std::size_t>> clusters;
  std::optional<LabeledDataset> validation;
  std::optional<GaussianMixtureSource> source;
  PointSet reference;
};

LabeledDataset label_plain(const PointSet& data, const PointSet& normals, bool rescale, double tie_tolerance) {
  if (data.dim() == 1) return label_1d(data, normals);
  return label_greedy_centered(data, normals, rescale, tie_tolerance).pairs;
}

PreparedData prepare_swiss(const ExperimentConfig& cfg, const Rng& root) {
  Rng data_rng = root.split(kDataStream);
  Rng source_rng = root.split(kSourceStream);
  Rng val_rng = root.split(kValidationStream);
  Rng ref_rng = root.split(kReferenceStream);
  const SwissRollSpec spec;
  PreparedData out;
  out.pairs = label_1d(sample_swiss_roll_theta(data_rng, cfg.n_train, spec),
                       sample_standard_normal(source_rng, cfg.n_train, 1));
  const auto val_theta = sample_swiss_roll_theta(val_rng, cfg.n_val, spec);
  out.validation = label_1d(val_theta, sample_standard_normal(val_rng, cfg.n_val, 1));
  out.reference = sample_swiss_roll_theta(ref_rng, cfg.n_generate, spec);
  return out;
}

PreparedData prepare_uniform2d(const ExperimentConfig& cfg, const Rng& root) {
  Rng data_rng = root.split(kDataStream);
  Rng source_rng = root.split(kSourceStream);
  Rng val_rng = root.split(kValidationStream);
  Rng ref_rng = root.split(kReferenceStream);
  const auto box = UniformBoxSpec::unit(2);
  PreparedData out;
  out.pairs = label_plain(sample_uniform_box(data_rng, cfg.n_train, box),
                          sample_standard_normal(source_rng, cfg.n_train, 2), cfg.rescale, cfg.tie_tolerance);
  const auto val_x = sample_uniform_box(val_rng, cfg.n_val, box);
  out.validation = label_plain(val_x, sample_standard_normal(val_rng, cfg.n_val, 2), cfg.rescale, cfg.tie_tolerance);
  out.reference = sample_uniform_box(ref_rng, cfg.n_generate, box);
  return out;
}

PreparedData prepare_disjoint(const ExperimentConfig& cfg, const Rng& root) {
  Rng data_rng = root.split(kDataStream);
  Rng source_rng = root.split(kSourceStream);
  Rng val_rng = root.split(kValidationStream);
  Rng ref_rng = root.split(kReferenceStream);
  Rng cluster_rng = root.split(kClusterStream);
  const auto spec = disjoint_preset_spec();
  const auto data = sample_disjoint_uniform(data_rng, cfg.n_train, spec).points;
  const auto clusters = fit_clusters(cluster_rng, data, cfg.clusters.value_or(2));

  PreparedData out;
  auto labeled = label_clustered(source_rng, data, clusters, cfg.tie_tolerance);
  out.pairs = std::move(labeled.pairs);
  out.clusters = std::move(labeled.cluster_of_pair);
  out.source = mixture_from_clusters(clusters);

  const auto val_data = sample_disjoint_uniform(val_rng, cfg.n_val, spec).points;
  ClusterModel val_clusters = clusters;
  val_clusters.assignment.resize(val_data.size());
  for (std::size_t i = 0; i < val_data.size(); ++i) val_clusters.assignment[i] = clusters.nearest(val_data.row(i));
  out.validation = label_clustered(val_rng, val_data, val_clusters, cfg.tie_tolerance).pairs;
  out.reference = sample_disjoint_uniform(ref_rng, cfg.n_generate, spec).points;
  return out;
}

PreparedData prepare_custom(const ExperimentConfig& cfg, const Rng& root) {
  const auto table = read_csv(*cfg.data_path);
  const PointSet& all = table.rows;
  Rng data_rng = root.split(kDataStream);
  Rng source_rng = root.split(kSourceStream);
  Rng cluster_rng = root.split(kClusterStream);

  const auto perm = random_permutation(data_rng, all.size());
  const std::size_t n_ref = std::min(cfg.n_val, all.size() / 5);
  if (n_ref < 10 || all.size() - n_ref < 2) {
    throw Error(ErrorCode::kEmptyData, "custom data needs at least 50 rows (got " + std::to_string(all.size()) + ")");
  }
  const std::span<const std::size_t> idx(perm);
  const std::size_t n_train = std::min(cfg.n_train, all.size() - n_ref);
  PreparedData out;
  out.reference = all.select(idx.first(n_ref));
  const PointSet data = all.select(idx.subspan(n_ref, n_train));

  if (cfg.clusters) {
    const auto clusters = fit_clusters(cluster_rng, data, *cfg.clusters);
    auto labeled = label_clustered(source_rng, data, clusters, cfg.tie_tolerance);
    out.pairs = std::move(labeled.pairs);
    out.clusters = std::move(labeled.cluster_of_pair);
    out.source = mixture_from_clusters(clusters);
  } else {
    out.pairs = label_plain(data, sample_standard_normal(source_rng, data.size(), data.dim()), cfg.rescale, cfg.tie_tolerance);
  }
  return out;
}

std::optional<std::vector<double>> source_norms(const PointSet& sources) { return l2_norms(sources); }

void plot_run(const ExperimentConfig& cfg, const GeneratedSample& sample, const std::filesystem::path& path) {
  ScatterStyle style;
  style.title = experiment_name(cfg.experiment);
  if (cfg.experiment == Experiment::kSwiss1d) {
    write_scatter(path, cfg.plot_format, swiss_roll_embed(sample.outputs), sample.sources.column(0), style);
    return;
  }
  if (sample.outputs.dim() == 1) {
    PointSet curve(sample.outputs.size(), 2);
    for (std::size_t i = 0; i < curve.size(); ++i) {
      curve(i, 0) = sample.sources(i, 0);
      curve(i, 1) = sample.outputs(i, 0);
    }
    write_scatter(path, cfg.plot_format, curve, sample.sources.column(0), style);
    return;
  }
  write_scatter(path, cfg.plot_format, sample.outputs, source_norms(sample.sources), style);
}

}  // namespace

Experiment parse_experiment(const std::string& name) {
  if (name == "swiss1d") return Experiment::kSwiss1d;
  if (name == "uniform2d") return Experiment::kUniform2d;
  if (name == "disjoint_uniform") return Experiment::kDisjointUniform;
  if (name == "custom") return Experiment::kCustom;
  throw Error(ErrorCode::kConfig,
              "config field 'experiment': unknown value '" + name + "' (swiss1d, uniform2d, disjoint_uniform, custom)");
}

std::string experiment_name(Experiment e) {
  switch (e) {
    case Experiment::kSwiss1d: return "swiss1d";
    case Experiment::kUniform2d: return "uniform2d";
    case Experiment::kDisjointUniform: return "disjoint_uniform";
    case Experiment::kCustom: return "custom";
  }
  return "custom";
}

DisjointUniformSpec disjoint_preset_spec() {
  return {{UniformBoxSpec{{0.0, 0.0}, {1.0, 1.0}}, UniformBoxSpec{{2.0, 0.0}, {3.0, 1.0}}}, {0.6, 0.4}};
}

ExperimentConfig preset_config(Experiment e) {
  ExperimentConfig cfg;
  cfg.experiment = e;
  cfg.mlp.leaky_slope = 0.5;
  cfg.mlp.batch_norm = false;
  cfg.train.learning_rate = 1e-3;
  cfg.train.batch_size = 250;
  switch (e) {
    case Experiment::kSwiss1d:
      cfg.n_train = 50'000;
      cfg.mlp.input_dim = cfg.mlp.output_dim = 1;
      cfg.mlp.hidden_layers = 4;
      cfg.mlp.width = 6;
      break;
    case Experiment::kUniform2d:
      cfg.n_train = 100'000;
      cfg.mlp.input_dim = cfg.mlp.output_dim = 2;
      cfg.mlp.hidden_layers = 6;
      cfg.mlp.width = 6;
      cfg.train.patience = 200;
      cfg.train.max_epochs = 2000;
      break;
    case Experiment::kDisjointUniform:
      cfg.n_train = 20'000;
      cfg.clusters = 2;
      cfg.mlp.input_dim = cfg.mlp.output_dim = 2;
      cfg.mlp.hidden_layers = 6;
      cfg.mlp.width = 6;
      cfg.train.patience = 200;
      cfg.train.max_epochs = 2000;
      break;
    case Experiment::kCustom:
      cfg.n_train = 200'000;
      cfg.mlp.hidden_layers = 6;
      cfg.mlp.width = 32;
      break;
  }
  return cfg;
}

void ExperimentConfig::validate() const {
  require(n_train > 0, "n_train", "must be positive");
  require(n_val > 0, "n_val", "must be positive");
  require(n_generate > 0, "n_generate", "must be positive");
  require(!clusters || *clusters > 0, "clusters", "must be positive");
  require(std::isfinite(tie_tolerance) && tie_tolerance >= 0.0, "tie_tolerance", "must be finite and >= 0");
  require(experiment != Experiment::kCustom || data_path.has_value(), "data", "the custom experiment needs a data path");
  require(experiment == Experiment::kCustom || !data_path.has_value(), "data",
          "only the custom experiment reads a data file");
  require(mlp.hidden_layers >= 1, "mlp.hidden_layers", "must be >= 1");
  require(mlp.width >= 1, "mlp.width", "must be >= 1");
  require(mlp.leaky_slope >= 0.0 && mlp.leaky_slope <= 1.0, "mlp.leaky_slope", "must lie in [0, 1]");
  require(train.learning_rate > 0.0, "train.learning_rate", "must be > 0");
  require(train.batch_size >= 1, "train.batch_size", "must be >= 1");
  require(train.max_epochs >= 1, "train.max_epochs", "must be >= 1");
  require(train.patience >= 1, "train.patience", "must be >= 1");
  require(train.val_fraction > 0.0 && train.val_fraction < 1.0, "train.val_fraction", "must lie in (0, 1)");
  require(n_train >= 2 * train.batch_size || experiment == Experiment::kCustom, "n_train",
          "must cover at least two batches");
}

nlohmann::json ExperimentConfig::to_json() const {
  return {
      {"experiment", experiment_name(experiment)},
      {"n_train", n_train},
      {"n_val", n_val},
      {"n_generate", n_generate},
      {"seed", seed},
      {"clusters", clusters ? nlohmann::json(*clusters) : nlohmann::json(nullptr)},
      {"rescale", rescale},
      {"tie_tolerance", tie_tolerance},
      {"data", data_path ? nlohmann::json(data_path->string()) : nlohmann::json(nullptr)},
      {"out_dir", out_dir.string()},
      {"format", image_extension(plot_format)},
      {"mlp",
       {{"input_dim", mlp.input_dim},
        {"output_dim", mlp.output_dim},
        {"hidden_layers", mlp.hidden_layers},
        {"width", mlp.width},
        {"leaky_slope", mlp.leaky_slope},
        {"batch_norm", mlp.batch_norm}}},
      {"train",
       {{"learning_rate", train.learning_rate},
        {"batch_size", train.batch_size},
        {"max_epochs", train.max_epochs},
        {"patience", train.patience},
        {"val_fraction", train.val_fraction},
        {"adam_beta1", train.adam_beta1},
        {"adam_beta2", train.adam_beta2},
        {"adam_epsilon", train.adam_epsilon}}},
  };
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kConfig, "config must be a JSON object");
  std::string name = "swiss1d";
  read_if(j, "experiment", name);
  ExperimentConfig cfg = preset_config(parse_experiment(name));
  read_if(j, "n_train", cfg.n_train);
  read_if(j, "n_val", cfg.n_val);
  read_if(j, "n_generate", cfg.n_generate);
  read_if(j, "seed", cfg.seed);
  read_if(j, "rescale", cfg.rescale);
  read_if(j, "tie_tolerance", cfg.tie_tolerance);
  if (j.contains("clusters")) {
    cfg.clusters.reset();
    if (!j.at("clusters").is_null()) {
      std::size_t k = 0;
      read_if(j, "clusters", k);
      cfg.clusters = k;
    }
  }
  if (j.contains("data") && !j.at("data").is_null()) {
    std::string path;
    read_if(j, "data", path);
    cfg.data_path = path;
  }
  std::string out_dir = cfg.out_dir.string();
  read_if(j, "out_dir", out_dir);
  cfg.out_dir = out_dir;
  if (j.contains("format")) {
    std::string format;
    read_if(j, "format", format);
    cfg.plot_format = parse_image_format(format);
  }
  if (j.contains("mlp")) {
    const auto& m = j.at("mlp");
    read_if(m, "input_dim", cfg.mlp.input_dim);
    read_if(m, "output_dim", cfg.mlp.output_dim);
    read_if(m, "hidden_layers", cfg.mlp.hidden_layers);
    read_if(m, "width", cfg.mlp.width);
    read_if(m, "leaky_slope", cfg.mlp.leaky_slope);
    read_if(m, "batch_norm", cfg.mlp.batch_norm);
  }
  if (j.contains("train")) {
    const auto& t = j.at("train");
    read_if(t, "learning_rate", cfg.train.learning_rate);
    read_if(t, "batch_size", cfg.train.batch_size);
    read_if(t, "max_epochs", cfg.train.max_epochs);
    read_if(t, "patience", cfg.train.patience);
    read_if(t, "val_fraction", cfg.train.val_fraction);
    read_if(t, "adam_beta1", cfg.train.adam_beta1);
    read_if(t, "adam_beta2", cfg.train.adam_beta2);
    read_if(t, "adam_epsilon", cfg.train.adam_epsilon);
  }
  return cfg;
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json outs = nlohmann::json::object();
  for (const auto& [k, p] : outputs) outs[k] = p.string();
  return {{"config", config.to_json()},   {"software_version", software_version},
          {"timings_ms", timings_ms},     {"outputs", outs},
          {"metrics", metrics.to_json()}, {"history", history.to_json()}};
}

MetricsReport evaluate_swiss(const PointSet& generated_theta, const PointSet& reference_theta,
                             const MlpModel* model, std::uint64_t seed) {
  const SwissRollSpec spec;
  MetricsReport report;
  const std::size_t n = generated_theta.size();
  report.set("ks_theta", ks_statistic(generated_theta, reference_theta), n, seed);

  const auto distances = manifold_distance_swiss(swiss_roll_embed(generated_theta), spec, kSwissManifoldGrid);
  const auto off = std::count_if(distances.begin(), distances.end(), [](double d) { return d > kSwissOodThreshold; });
  report.set("ood_fraction", static_cast<double>(off) / static_cast<double>(n), n, seed);
  report.set("manifold_distance_max", *std::max_element(distances.begin(), distances.end()), n, seed);

  std::size_t in_range = 0;
  for (double t : generated_theta.values()) in_range += (t > spec.theta_min - 0.1 && t < spec.theta_max + 0.1) ? 1 : 0;
  report.set("theta_in_range_fraction", static_cast<double>(in_range) / static_cast<double>(n), n, seed);

  if (model) {
    const auto grid = linspace(-3.0, 3.0, 1001);
    report.set("monotonicity_violations", monotonicity_violations(*model, grid), grid.size(), seed);
  }
  return report;
}

MetricsReport evaluate_uniform2d(const PointSet& generated, const PointSet& reference, std::uint64_t seed) {
  if (generated.dim() != 2 || reference.dim() != 2) {
    throw Error(ErrorCode::kDimensionMismatch, "uniform2d evaluation needs 2-dimensional samples");
  }
  MetricsReport report;
  const std::size_t n = generated.size();
  report.set("inside_fraction", fraction_in_box(generated, UniformBoxSpec::unit(2), 0.05), n, seed);
  const auto chi = grid_chi_square(generated, GridSpec{10, {0.0, 0.0}, {1.0, 1.0}});
  report.set("chi_square", chi.statistic, n, seed);
  report.set("chi_square_dof", static_cast<double>(chi.dof), n, seed);
  report.set("out_of_box_fraction", chi.out_of_box_fraction, n, seed);
  report.set("energy_distance", energy_distance(generated, reference, seed), n, seed);
  std::vector<std::size_t> held(std::min(kCoverageHeldOut, reference.size()));
  for (std::size_t i = 0; i < held.size(); ++i) held[i] = i;
  report.set("coverage", coverage_score(generated, reference.select(held), kCoverageRadius), held.size(), seed);
  return report;
}

MetricsReport evaluate_disjoint(const PointSet& generated, const PointSet& reference,
                                const DisjointUniformSpec& spec, std::uint64_t seed) {
  if (generated.dim() != spec.dim() || reference.dim() != spec.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "disjoint evaluation: sample dimension does not match the boxes");
  }
  MetricsReport report;
  const std::size_t n = generated.size();
  std::size_t inside = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const bool hit = std::any_of(spec.boxes.begin(), spec.boxes.end(),
                                 [&](const UniformBoxSpec& b) { return b.contains(generated.row(i), kSupportMargin); });
    inside += hit ? 1 : 0;
  }
  report.set("in_support_fraction", static_cast<double>(inside) / static_cast<double>(n), n, seed);
  const auto gen_props = box_proportions(generated, spec);
  const auto ref_props = box_proportions(reference, spec);
  double worst = 0.0;
  for (std::size_t b = 0; b < spec.boxes.size(); ++b) {
    const auto tag = "box" + std::to_string(b);
    report.set(tag + "_proportion", gen_props[b], n, seed);
    report.set(tag + "_reference_proportion", ref_props[b], reference.size(), seed);
    worst = std::max(worst, std::abs(gen_props[b] - ref_props[b]));
  }
  report.set("max_proportion_error", worst, n, seed);
  report.set("energy_distance", energy_distance(generated, reference, seed), n, seed);
  return report;
}

MetricsReport evaluate_custom(const PointSet& generated, const PointSet& reference, std::uint64_t seed) {
  if (generated.dim() != reference.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "generated dimension " + std::to_string(generated.dim()) +
                                                   " does not match reference dimension " +
                                                   std::to_string(reference.dim()));
  }
  MetricsReport report;
  const std::size_t n = generated.size();
  report.set("energy_distance", energy_distance(generated, reference, seed), n, seed);
  double worst = 0.0;
  for (std::size_t j = 0; j < generated.dim(); ++j) {
    const PointSet a(1, generated.column(j));
    const PointSet b(1, reference.column(j));
    worst = std::max(worst, ks_statistic(a, b));
  }
  report.set("ks_max_marginal", worst, n, seed);
  return report;
}

RunManifest cmd_run(const ExperimentConfig& config) {
  config.validate();
  RunManifest manifest;
  manifest.config = config;
  const auto& out_dir = config.out_dir;
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir)) {
    throw Error(ErrorCode::kIo, "cannot create output directory '" + out_dir.string() + "'");
  }

  const Rng root(config.seed);
  auto t0 = Clock::now();
  PreparedData prepared;
  switch (config.experiment) {
    case Experiment::kSwiss1d: prepared = prepare_swiss(config, root); break;
    case Experiment::kUniform2d: prepared = prepare_uniform2d(config, root); break;
    case Experiment::kDisjointUniform: prepared = prepare_disjoint(config, root); break;
    case Experiment::kCustom: prepared = prepare_custom(config, root); break;
  }
  manifest.timings_ms["data_and_labeling"] = elapsed_ms(t0);

  const auto outputs_path = [&](const std::string& name) {
    manifest.outputs[name] = out_dir / name;
    return out_dir / name;
  };
  write_pairs_csv(outputs_path("pairs.csv"), prepared.pairs, prepared.clusters ? &*prepared.clusters : nullptr);

  t0 = Clock::now();
  MlpConfig mlp = config.mlp;
  mlp.input_dim = mlp.output_dim = prepared.pairs.sources.dim();
  mlp.seed = config.seed;
  Rng init_rng = root.split(kInitStream);
  Rng train_rng = root.split(kTrainStream);
  MlpModel model = init_model(mlp, init_rng);
  model.source() = prepared.source;
  auto trained = train(std::move(model), prepared.pairs, config.train, train_rng, prepared.validation);
  manifest.history = trained.history;
  manifest.timings_ms["training"] = elapsed_ms(t0);
  save_model(trained.model, outputs_path("model.bin"));
  write_text_file(outputs_path("history.json"), trained.history.to_json().dump(2) + "\n");

  t0 = Clock::now();
  Rng gen_rng = root.split(kGenerateStream);
  const auto sample = generate_with_sources(trained.model, gen_rng, config.n_generate);
  write_points_csv(outputs_path("samples.csv"), sample.outputs);
  manifest.timings_ms["sampling"] = elapsed_ms(t0);

  t0 = Clock::now();
  switch (config.experiment) {
    case Experiment::kSwiss1d:
      manifest.metrics = evaluate_swiss(sample.outputs, prepared.reference, &trained.model, config.seed);
      break;
    case Experiment::kUniform2d:
      manifest.metrics = evaluate_uniform2d(sample.outputs, prepared.reference, config.seed);
      break;
    case Experiment::kDisjointUniform:
      manifest.metrics = evaluate_disjoint(sample.outputs, prepared.reference, disjoint_preset_spec(), config.seed);
      break;
    case Experiment::kCustom:
      manifest.metrics = evaluate_custom(sample.outputs, prepared.reference, config.seed);
      break;
  }
  manifest.metrics.set("best_val_mse", trained.history.best_val_loss, prepared.pairs.size(), config.seed);
  write_text_file(outputs_path("metrics.json"), manifest.metrics.to_json().dump(2) + "\n");
  manifest.timings_ms["evaluation"] = elapsed_ms(t0);

  if (sample.outputs.dim() <= 2) {
    t0 = Clock::now();
    plot_run(config, sample, outputs_path("plot." + image_extension(config.plot_format)));
    manifest.timings_ms["plot"] = elapsed_ms(t0);
  }

  manifest.outputs["manifest.json"] = out_dir / "manifest.json";
  write_text_file(out_dir / "manifest.json", manifest.to_json().dump(2) + "\n");
  return manifest;
}

std::size_t cmd_label(const std::filesystem::path& data_csv, const std::filesystem::path& out_csv,
                      const LabelOptions& options) {
  PointSet data = read_csv(data_csv).rows;
  const Rng root(options.seed);
  if (options.max_rows > 0 && data.size() > options.max_rows) {
    Rng sub_rng = root.split(kDataStream);
    auto perm = random_permutation(sub_rng, data.size());
    perm.resize(options.max_rows);
    data = data.select(perm);
  }
  Rng source_rng = root.split(kSourceStream);
  if (options.clusters) {
    Rng cluster_rng = root.split(kClusterStream);
    const auto clusters = fit_clusters(cluster_rng, data, *options.clusters);
    const auto labeled = label_clustered(source_rng, data, clusters, options.tie_tolerance);
    write_pairs_csv(out_csv, labeled.pairs, &labeled.cluster_of_pair);
    return labeled.pairs.size();
  }
  const auto pairs = label_plain(data, sample_standard_normal(source_rng, data.size(), data.dim()), options.rescale, options.tie_tolerance);
  write_pairs_csv(out_csv, pairs);
  return pairs.size();
}

TrainHistory cmd_train(const std::filesystem::path& pairs_csv, const std::filesystem::path& out_dir,
                       const TrainOptions& options) {
  const auto table = read_pairs_csv(pairs_csv);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir)) {
    throw Error(ErrorCode::kIo, "cannot create output directory '" + out_dir.string() + "'");
  }
  MlpConfig mlp = options.mlp;
  mlp.input_dim = mlp.output_dim = table.pairs.sources.dim();
  mlp.seed = options.seed;
  const Rng root(options.seed);
  Rng init_rng = root.split(kInitStream);
  Rng train_rng = root.split(kTrainStream);
  MlpModel model = init_model(mlp, init_rng);
  if (table.clusters) model.source() = mixture_from_pairs(table.pairs, *table.clusters);
  auto trained = train(std::move(model), table.pairs, options.train, train_rng);
  save_model(trained.model, out_dir / "model.bin");
  write_text_file(out_dir / "history.json", trained.history.to_json().dump(2) + "\n");
  return trained.history;
}

std::filesystem::path cmd_sample(const std::filesystem::path& model_path, std::size_t n, std::uint64_t seed,
                                 const std::filesystem::path& out_csv) {
  const auto model = load_model(model_path);
  Rng gen_rng = Rng(seed).split(kGenerateStream);
  write_points_csv(out_csv, generate(model, gen_rng, n));
  return out_csv;
}

MetricsReport cmd_eval(const EvalOptions& options) {
  const PointSet generated = read_csv(options.generated_csv).rows;
  std::optional<PointSet> reference;
  if (options.reference_csv) reference = read_csv(*options.reference_csv).rows;
  Rng ref_rng = Rng(options.seed).split(kReferenceStream);
  const std::size_t n = generated.size();

  MetricsReport report;
  switch (options.experiment) {
    case Experiment::kSwiss1d: {
      if (generated.dim() != 1) {
        throw Error(ErrorCode::kDimensionMismatch, "swiss1d evaluation expects 1 column of theta values, got " +
                                                       std::to_string(generated.dim()));
      }
      if (!options.model_path) {
        throw Error(ErrorCode::kConfig, "swiss1d evaluation needs --model for the monotonicity check");
      }
      const auto model = load_model(*options.model_path);
      const PointSet ref = reference ? *reference : sample_swiss_roll_theta(ref_rng, n);
      report = evaluate_swiss(generated, ref, &model, options.seed);
      break;
    }
    case Experiment::kUniform2d: {
      const PointSet ref = reference ? *reference : sample_uniform_box(ref_rng, n, UniformBoxSpec::unit(2));
      report = evaluate_uniform2d(generated, ref, options.seed);
      break;
    }
    case Experiment::kDisjointUniform: {
      const auto spec = disjoint_preset_spec();
      const PointSet ref = reference ? *reference : sample_disjoint_uniform(ref_rng, n, spec).points;
      report = evaluate_disjoint(generated, ref, spec, options.seed);
      break;
    }
    case Experiment::kCustom:
      if (!reference) throw Error(ErrorCode::kConfig, "custom evaluation requires an explicit --reference CSV");
      report = evaluate_custom(generated, *reference, options.seed);
      break;
  }
  write_text_file(options.out_json, report.to_json().dump(2) + "\n");
  return report;
}

PlotStyle parse_plot_style(const std::string& name) {
  if (name == "auto") return PlotStyle::kAuto;
  if (name == "scatter") return PlotStyle::kScatter;
  if (name == "swiss") return PlotStyle::kSwiss;
  throw Error(ErrorCode::kConfig, "unknown plot style '" + name + "' (auto, scatter, swiss)");
}

std::filesystem::path cmd_plot(const std::filesystem::path& samples_csv, const std::filesystem::path& out_image,
                               PlotStyle style, std::optional<std::pair<std::size_t, std::size_t>> columns) {
  const auto table = read_csv(samples_csv);
  const auto& h = table.header;
  std::vector<std::size_t> y_cols;
  std::vector<std::size_t> x_cols;
  for (std::size_t j = 0; j < h.size(); ++j) {
    if (!h[j].empty() && h[j][0] == 'y') y_cols.push_back(j);
    else if (!h[j].empty() && h[j][0] == 'x') x_cols.push_back(j);
  }
  const bool paired = !y_cols.empty() && y_cols.size() == x_cols.size();
  if (!paired) {
    x_cols.clear();
    for (std::size_t j = 0; j < table.rows.dim(); ++j) x_cols.push_back(j);
  }
  const std::size_t n = table.rows.size();
  PointSet xs(n, x_cols.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < x_cols.size(); ++j) xs(i, j) = table.rows(i, x_cols[j]);
  }
  std::optional<std::vector<double>> colors;
  if (paired) {
    PointSet ys(n, y_cols.size());
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < y_cols.size(); ++j) ys(i, j) = table.rows(i, y_cols[j]);
    }
    colors = ys.dim() == 1 ? ys.column(0) : l2_norms(ys);
  }

  if (columns) {
    const auto [a, b] = *columns;
    if (a >= xs.dim() || b >= xs.dim()) {
      throw Error(ErrorCode::kInvalidArgument, "--columns index out of range for " + std::to_string(xs.dim()) + " columns");
    }
    PointSet picked(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
      picked(i, 0) = xs(i, a);
      picked(i, 1) = xs(i, b);
    }
    xs = std::move(picked);
  }
  if (xs.dim() > 2) {
    throw Error(ErrorCode::kDimensionMismatch, "data has " + std::to_string(xs.dim()) +
                                                   " dimensions; pick two with --columns i,j");
  }

  const auto format = parse_image_format(out_image.extension().string().empty()
                                             ? std::string("png")
                                             : out_image.extension().string().substr(1));
  PointSet canvas;
  if (xs.dim() == 2) {
    if (style == PlotStyle::kSwiss) throw Error(ErrorCode::kDimensionMismatch, "swiss style needs 1D theta data");
    canvas = xs;
  } else if (style == PlotStyle::kSwiss) {
    canvas = swiss_roll_embed(xs);
  } else if (paired) {
    canvas = PointSet(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
      canvas(i, 0) = (*colors)[i];
      canvas(i, 1) = xs(i, 0);
    }
  } else {
    // Empirical CDF of the 1D sample.
    auto v = xs.column(0);
    std::sort(v.begin(), v.end());
    canvas = PointSet(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
      canvas(i, 0) = v[i];
      canvas(i, 1) = (static_cast<double>(i) + 1.0) / static_cast<double>(n);
    }
  }
  ScatterStyle scatter_style;
  scatter_style.title = samples_csv.filename().string();
  write_scatter(out_image, format, canvas, colors, scatter_style);
  return out_image;
}

}  // namespace gtn
