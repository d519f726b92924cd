// gtn_lab: command-line runner for generative topological network experiments.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "gtn/error.hpp"
#include "gtn/experiment.hpp"

namespace {

struct NetFlags {
  std::optional<std::size_t> layers;
  std::optional<std::size_t> width;
  std::optional<double> lr;
  std::optional<std::size_t> batch_size;
  std::optional<std::size_t> patience;
  std::optional<std::size_t> max_epochs;
  bool batch_norm = false;

  void add_to(CLI::App* app) {
    app->add_option("--layers", layers, "Hidden layers");
    app->add_option("--width", width, "Hidden layer width");
    app->add_option("--lr", lr, "Adam learning rate");
    app->add_option("--batch-size", batch_size, "Mini-batch size");
    app->add_option("--patience", patience, "Epochs without validation improvement before stopping");
    app->add_option("--max-epochs", max_epochs, "Upper bound on training epochs");
    app->add_flag("--batch-norm", batch_norm, "Batch normalization after each hidden activation");
  }

  void apply(gtn::MlpConfig& mlp, gtn::TrainConfig& train) const {
    if (layers) mlp.hidden_layers = *layers;
    if (width) mlp.width = *width;
    if (batch_norm) mlp.batch_norm = true;
    if (lr) train.learning_rate = *lr;
    if (batch_size) train.batch_size = *batch_size;
    if (patience) train.patience = *patience;
    if (max_epochs) train.max_epochs = *max_epochs;
  }
};

std::pair<std::size_t, std::size_t> parse_columns(const std::string& spec) {
  const auto comma = spec.find(',');
  if (comma == std::string::npos) throw gtn::Error(gtn::ErrorCode::kInvalidArgument, "--columns expects i,j");
  try {
    return {std::stoul(spec.substr(0, comma)), std::stoul(spec.substr(comma + 1))};
  } catch (const std::exception&) {
    throw gtn::Error(gtn::ErrorCode::kInvalidArgument, "--columns expects two non-negative integers i,j");
  }
}

int fail(std::string_view tag, const std::string& message) {
  std::string flat = message;
  for (char& c : flat) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  std::cerr << "error[" << tag << "]: " << flat << "\n";
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generative topological network lab: label, train, sample and evaluate"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "Full pipeline: data -> labels -> training -> samples -> metrics");
  std::string experiment = "swiss1d";
  std::optional<std::string> config_path;
  std::optional<std::size_t> n_train, n_val, n_generate, clusters;
  std::optional<std::uint64_t> run_seed;
  std::optional<std::string> run_data, run_out_dir, run_format;
  bool run_rescale = false;
  std::optional<double> run_tie_tolerance;
  NetFlags run_net;
  run->add_option("--experiment", experiment, "swiss1d | uniform2d | disjoint_uniform | custom");
  run->add_option("--config", config_path, "JSON config file; command-line flags override it");
  run->add_option("--n-train", n_train, "Training sample size");
  run->add_option("--n-val", n_val, "Validation sample size");
  run->add_option("--n-generate", n_generate, "Number of generated samples");
  run->add_option("--seed", run_seed, "Master seed");
  run->add_option("--clusters", clusters, "Cluster count for per-cluster labeling");
  run->add_option("--data", run_data, "CSV of data vectors (custom experiment)");
  run->add_option("--out-dir", run_out_dir, "Output directory");
  run->add_option("--format", run_format, "Plot format: png | svg");
  run->add_flag("--rescale", run_rescale, "Scale coordinates to unit variance before labeling");
  run->add_option("--tie-tolerance", run_tie_tolerance, "Cosine scores this close to the best count as ties");
  run_net.add_to(run);

  // label
  auto* label = app.add_subcommand("label", "Build (y, x_y) training pairs for a data CSV");
  std::string label_data, label_out = "pairs.csv";
  gtn::LabelOptions label_opts;
  std::optional<std::size_t> label_clusters;
  label->add_option("--data", label_data, "Data CSV")->required();
  label->add_option("--out", label_out, "Pairs CSV to write");
  label->add_option("--seed", label_opts.seed, "Seed for the normal sample");
  label->add_option("--clusters", label_clusters, "Label per k-means cluster");
  label->add_flag("--rescale", label_opts.rescale, "Scale coordinates to unit variance before labeling");
  label->add_option("--tie-tolerance", label_opts.tie_tolerance, "Cosine scores this close to the best count as ties");
  label->add_option("--max-rows", label_opts.max_rows, "Subsample to at most this many rows (0 = all)");

  // train
  auto* train = app.add_subcommand("train", "Fit the generator on a pairs CSV");
  std::string train_data, train_out_dir = ".";
  std::uint64_t train_seed = 7;
  NetFlags train_net;
  train->add_option("--data", train_data, "Pairs CSV")->required();
  train->add_option("--out-dir", train_out_dir, "Directory for model.bin and history.json");
  train->add_option("--seed", train_seed, "Seed");
  train_net.add_to(train);

  // sample
  auto* sample = app.add_subcommand("sample", "Generate vectors from a trained model");
  std::string sample_model, sample_out = "samples.csv";
  std::size_t sample_n = 10'000;
  std::uint64_t sample_seed = 7;
  sample->add_option("--model", sample_model, "Model file")->required();
  sample->add_option("--n-generate", sample_n, "Number of samples");
  sample->add_option("--seed", sample_seed, "Seed");
  sample->add_option("--out", sample_out, "Output CSV");

  // eval
  auto* eval = app.add_subcommand("eval", "Score generated samples against a reference");
  std::string eval_experiment = "custom";
  gtn::EvalOptions eval_opts;
  std::string eval_data, eval_out = "metrics.json";
  std::optional<std::string> eval_reference, eval_model;
  eval->add_option("--experiment", eval_experiment, "Metric preset");
  eval->add_option("--data", eval_data, "Generated samples CSV")->required();
  eval->add_option("--reference", eval_reference, "Reference samples CSV");
  eval->add_option("--model", eval_model, "Model file (needed for swiss1d monotonicity)");
  eval->add_option("--out", eval_out, "Metrics JSON to write");
  eval->add_option("--seed", eval_opts.seed, "Seed for reference draws and subsampling");

  // plot
  auto* plot = app.add_subcommand("plot", "Static scatter plot of a samples or pairs CSV");
  std::string plot_data, plot_out, plot_style = "auto";
  std::optional<std::string> plot_columns;
  std::optional<std::string> plot_format;
  plot->add_option("--data", plot_data, "Samples or pairs CSV")->required();
  plot->add_option("--out", plot_out, "Image path (.png or .svg)");
  plot->add_option("--style", plot_style, "auto | scatter | swiss");
  plot->add_option("--columns", plot_columns, "Two coordinates to plot for d > 2, e.g. 0,1");
  plot->add_option("--format", plot_format, "png | svg when --out has no extension");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("E_USAGE", e.what());
  }

  try {
    if (*run) {
      gtn::ExperimentConfig cfg = gtn::preset_config(gtn::parse_experiment(experiment));
      if (config_path) {
        std::ifstream in(*config_path);
        if (!in) throw gtn::Error(gtn::ErrorCode::kIo, "cannot open config '" + *config_path + "'");
        nlohmann::json j;
        try {
          in >> j;
        } catch (const nlohmann::json::exception& e) {
          throw gtn::Error(gtn::ErrorCode::kConfig, "config '" + *config_path + "' is not valid JSON: " + e.what());
        }
        if (run->count("--experiment")) j["experiment"] = experiment;
        cfg = gtn::ExperimentConfig::from_json(j);
      }
      if (n_train) cfg.n_train = *n_train;
      if (n_val) cfg.n_val = *n_val;
      if (n_generate) cfg.n_generate = *n_generate;
      if (run_seed) cfg.seed = *run_seed;
      if (clusters) cfg.clusters = *clusters;
      if (run_data) cfg.data_path = *run_data;
      if (run_out_dir) cfg.out_dir = *run_out_dir;
      if (run_format) cfg.plot_format = gtn::parse_image_format(*run_format);
      if (run_rescale) cfg.rescale = true;
      if (run_tie_tolerance) cfg.tie_tolerance = *run_tie_tolerance;
      run_net.apply(cfg.mlp, cfg.train);
      const auto manifest = gtn::cmd_run(cfg);
      std::cout << manifest.metrics.to_json().dump(2) << "\n";
    } else if (*label) {
      label_opts.clusters = label_clusters;
      const auto count = gtn::cmd_label(label_data, label_out, label_opts);
      std::cout << "wrote " << count << " pairs to " << label_out << "\n";
    } else if (*train) {
      gtn::TrainOptions opts;
      opts.seed = train_seed;
      train_net.apply(opts.mlp, opts.train);
      const auto history = gtn::cmd_train(train_data, train_out_dir, opts);
      std::cout << "trained " << history.epochs.size() << " epochs, best validation MSE "
                << history.best_val_loss << " at epoch " << history.best_epoch << "\n";
    } else if (*sample) {
      gtn::cmd_sample(sample_model, sample_n, sample_seed, sample_out);
      std::cout << "wrote " << sample_n << " samples to " << sample_out << "\n";
    } else if (*eval) {
      eval_opts.experiment = gtn::parse_experiment(eval_experiment);
      eval_opts.generated_csv = eval_data;
      if (eval_reference) eval_opts.reference_csv = *eval_reference;
      if (eval_model) eval_opts.model_path = *eval_model;
      eval_opts.out_json = eval_out;
      const auto report = gtn::cmd_eval(eval_opts);
      std::cout << report.to_json().dump(2) << "\n";
    } else if (*plot) {
      std::filesystem::path out = plot_out.empty() ? std::filesystem::path("plot") : std::filesystem::path(plot_out);
      if (!out.has_extension()) out += "." + plot_format.value_or("png");
      std::optional<std::pair<std::size_t, std::size_t>> cols;
      if (plot_columns) cols = parse_columns(*plot_columns);
      gtn::cmd_plot(plot_data, out, gtn::parse_plot_style(plot_style), cols);
      std::cout << "wrote " << out.string() << "\n";
    }
  } catch (const gtn::Error& e) {
    return fail(gtn::error_code_tag(e.code()), e.what());
  } catch (const std::exception& e) {
    return fail("E_INTERNAL", e.what());
  }
  return 0;
}
