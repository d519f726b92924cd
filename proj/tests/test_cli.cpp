#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "gtn/csv.hpp"
#include "gtn/error.hpp"
#include "gtn/experiment.hpp"
#include "gtn/model_io.hpp"
#include "gtn/numeric.hpp"
#include "gtn/rng.hpp"
#include "gtn/synth.hpp"

#include <sys/wait.h>
#include <unistd.h>

using namespace gtn;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Exec {
  int status;
  std::string err;
};

Exec run_lab(const std::string& args, const fs::path& dir) {
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = std::string(GTN_LAB_PATH) + " " + args + " >/dev/null 2>" + err.string();
  const int raw = std::system(cmd.c_str());
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, slurp(err)};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("gtn_cli_") + info->name() + "_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& text) {
    write_text_file(dir_ / name, text);
    return dir_ / name;
  }

  fs::path dir_;
};

ExperimentConfig tiny_swiss(const fs::path& out) {
  auto cfg = preset_config(Experiment::kSwiss1d);
  cfg.n_train = 2000;
  cfg.n_val = 500;
  cfg.n_generate = 300;
  cfg.train.max_epochs = 5;
  cfg.out_dir = out;
  return cfg;
}

}  // namespace

TEST(Csv, FormatRoundTrips) {
  Rng r(1);
  for (int i = 0; i < 1000; ++i) {
    const double v = r.normal() * std::pow(10.0, r.uniform(-20, 20));
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
}

TEST(Csv, ParseErrorsNameTheLine) {
  try {
    parse_csv("x0,x1\n1,2\n3\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParse);
    EXPECT_NE(std::string(e.what()).find(":3"), std::string::npos) << e.what();
  }
  try {
    parse_csv("1,2\n3,abc\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos) << e.what();
  }
  try {
    parse_csv("x0,x1\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyData);
    EXPECT_NE(std::string(e.what()).find("empty dataset"), std::string::npos);
  }
  const auto t = parse_csv("1.5,2\n3,4\n");
  EXPECT_EQ(t.rows.size(), 2u);
}

TEST(Config, RoundTripIsIdempotent) {
  for (auto e : {Experiment::kSwiss1d, Experiment::kUniform2d, Experiment::kDisjointUniform}) {
    auto cfg = preset_config(e);
    cfg.seed = 99;
    const auto once = cfg.to_json();
    const auto twice = ExperimentConfig::from_json(once).to_json();
    EXPECT_EQ(once, twice);
    EXPECT_EQ(ExperimentConfig::from_json(twice).to_json().dump(), twice.dump());
  }
}

TEST(Config, PresetsFollowTheRecipes) {
  const auto s = preset_config(Experiment::kSwiss1d);
  EXPECT_EQ(s.n_train, 50000u);
  EXPECT_EQ(s.mlp.hidden_layers, 4u);
  EXPECT_EQ(s.mlp.width, 6u);
  EXPECT_EQ(s.mlp.leaky_slope, 0.5);
  EXPECT_FALSE(s.mlp.batch_norm);
  EXPECT_EQ(s.train.learning_rate, 1e-3);
  EXPECT_EQ(s.train.batch_size, 250u);
  const auto u = preset_config(Experiment::kUniform2d);
  EXPECT_EQ(u.n_train, 100000u);
  EXPECT_EQ(u.mlp.hidden_layers, 6u);
  EXPECT_EQ(u.mlp.width, 6u);
  EXPECT_EQ(u.mlp.input_dim, 2u);
  const auto d = preset_config(Experiment::kDisjointUniform);
  EXPECT_EQ(d.n_train, 20000u);
  EXPECT_EQ(d.clusters, std::optional<std::size_t>(2));
}

TEST(Config, ValidationNamesField) {
  auto cfg = preset_config(Experiment::kSwiss1d);
  cfg.n_train = 0;
  try {
    cfg.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfig);
    EXPECT_NE(std::string(e.what()).find("n_train"), std::string::npos);
  }
  auto custom = preset_config(Experiment::kCustom);
  EXPECT_THROW(custom.validate(), Error);
}

TEST_F(CliTest, RunWritesAllArtifactsAndIsDeterministic) {
  const auto cfg = tiny_swiss(dir_ / "a");
  const auto manifest = cmd_run(cfg);
  for (const char* f : {"samples.csv", "pairs.csv", "model.bin", "metrics.json", "manifest.json", "plot.png",
                        "history.json"}) {
    EXPECT_TRUE(fs::exists(dir_ / "a" / f)) << f;
  }
  EXPECT_GT(fs::file_size(dir_ / "a" / "plot.png"), 0u);
  for (const char* k : {"ks_theta", "monotonicity_violations", "ood_fraction"}) EXPECT_TRUE(manifest.metrics.contains(k));

  // Replaying the recorded config reproduces the outputs.
  const auto recorded = nlohmann::json::parse(slurp(dir_ / "a" / "manifest.json"));
  auto replay = ExperimentConfig::from_json(recorded.at("config"));
  replay.out_dir = dir_ / "b";
  cmd_run(replay);
  EXPECT_EQ(slurp(dir_ / "a" / "samples.csv"), slurp(dir_ / "b" / "samples.csv"));
  EXPECT_EQ(slurp(dir_ / "a" / "metrics.json"), slurp(dir_ / "b" / "metrics.json"));

  // sample with the run's seed regenerates the same file.
  cmd_sample(dir_ / "a" / "model.bin", cfg.n_generate, cfg.seed, dir_ / "again.csv");
  EXPECT_EQ(slurp(dir_ / "a" / "samples.csv"), slurp(dir_ / "again.csv"));
}

TEST_F(CliTest, LabelOneDimensional) {
  Rng r(2);
  write_points_csv(dir_ / "d.csv", sample_uniform_box(r, 1000, UniformBoxSpec::unit(1)));
  EXPECT_EQ(cmd_label(dir_ / "d.csv", dir_ / "p.csv", LabelOptions{}), 1000u);
  const auto pairs = read_pairs_csv(dir_ / "p.csv");
  EXPECT_EQ(pairs.pairs.size(), 1000u);
  EXPECT_FALSE(pairs.clusters.has_value());
}

TEST_F(CliTest, LabelHeaderOnlyIsEmptyDataset) {
  const auto p = write("empty.csv", "x0,x1\n");
  try {
    cmd_label(p, dir_ / "out.csv", LabelOptions{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("empty dataset"), std::string::npos);
  }
}

TEST_F(CliTest, LabelRaggedRowNamesLine) {
  const auto p = write("bad.csv", "x0,x1\n0.1,0.2\n0.3\n");
  try {
    cmd_label(p, dir_ / "out.csv", LabelOptions{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParse);
    EXPECT_NE(std::string(e.what()).find(":3"), std::string::npos);
  }
}

TEST_F(CliTest, ClusteredLabelAddsClusterColumn) {
  Rng r(3);
  write_points_csv(dir_ / "d.csv", sample_disjoint_uniform(r, 2000, disjoint_preset_spec()).points);
  LabelOptions opts;
  opts.clusters = 2;
  EXPECT_EQ(cmd_label(dir_ / "d.csv", dir_ / "p.csv", opts), 2000u);
  const auto header = slurp(dir_ / "p.csv").substr(0, slurp(dir_ / "p.csv").find('\n'));
  EXPECT_EQ(header, "y0,y1,x0,x1,cluster");
  const auto pairs = read_pairs_csv(dir_ / "p.csv");
  ASSERT_TRUE(pairs.clusters.has_value());
  EXPECT_EQ(pairs.clusters->size(), 2000u);

  TrainOptions topts;
  topts.train.max_epochs = 3;
  cmd_train(dir_ / "p.csv", dir_ / "model", topts);
  const auto model = load_model(dir_ / "model" / "model.bin");
  ASSERT_TRUE(model.source().has_value());
  EXPECT_EQ(model.source()->weights.size(), 2u);
}

TEST_F(CliTest, SampleCountsAndDeterminism) {
  const auto cfg = tiny_swiss(dir_ / "run");
  cmd_run(cfg);
  const auto model = dir_ / "run" / "model.bin";
  cmd_sample(model, 200, 5, dir_ / "s1.csv");
  cmd_sample(model, 200, 5, dir_ / "s2.csv");
  EXPECT_EQ(read_csv(dir_ / "s1.csv").rows.size(), 200u);
  EXPECT_EQ(slurp(dir_ / "s1.csv"), slurp(dir_ / "s2.csv"));
  cmd_sample(model, 0, 5, dir_ / "s0.csv");
  EXPECT_EQ(slurp(dir_ / "s0.csv"), "x0\n");
  EXPECT_THROW(cmd_sample(dir_ / "missing.bin", 10, 1, dir_ / "x.csv"), Error);
}

TEST_F(CliTest, EvalContracts) {
  Rng r(4);
  write_points_csv(dir_ / "g.csv", sample_uniform_box(r, 500, UniformBoxSpec::unit(2)));
  EvalOptions opts;
  opts.experiment = Experiment::kCustom;
  opts.generated_csv = dir_ / "g.csv";
  opts.out_json = dir_ / "m.json";
  try {
    cmd_eval(opts);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("reference"), std::string::npos);
  }
  opts.reference_csv = dir_ / "g.csv";
  const auto same = cmd_eval(opts);
  EXPECT_LT(same.at("energy_distance").value, 1e-12);
  EXPECT_TRUE(fs::exists(dir_ / "m.json"));

  write_points_csv(dir_ / "g3.csv", sample_uniform_box(r, 500, UniformBoxSpec::unit(3)));
  opts.reference_csv = dir_ / "g3.csv";
  try {
    cmd_eval(opts);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }

  opts.experiment = Experiment::kUniform2d;
  opts.reference_csv.reset();
  const auto u = cmd_eval(opts);
  for (const char* k : {"chi_square", "energy_distance", "coverage", "inside_fraction"}) EXPECT_TRUE(u.contains(k));
}

TEST_F(CliTest, EvalSwissKeys) {
  cmd_run(tiny_swiss(dir_ / "run"));
  EvalOptions opts;
  opts.experiment = Experiment::kSwiss1d;
  opts.generated_csv = dir_ / "run" / "samples.csv";
  opts.model_path = dir_ / "run" / "model.bin";
  opts.out_json = dir_ / "m.json";
  const auto m = cmd_eval(opts);
  for (const char* k : {"ks_theta", "monotonicity_violations", "ood_fraction"}) EXPECT_TRUE(m.contains(k));
}

TEST_F(CliTest, PlotContracts) {
  Rng r(5);
  write_points_csv(dir_ / "u.csv", sample_uniform_box(r, 300, UniformBoxSpec::unit(2)));
  cmd_plot(dir_ / "u.csv", dir_ / "u.png", PlotStyle::kAuto);
  cmd_plot(dir_ / "u.csv", dir_ / "u.svg", PlotStyle::kAuto);
  EXPECT_GT(fs::file_size(dir_ / "u.png"), 0u);
  EXPECT_NE(slurp(dir_ / "u.svg").find("<svg"), std::string::npos);

  write_points_csv(dir_ / "t.csv", sample_swiss_roll_theta(r, 300));
  cmd_plot(dir_ / "t.csv", dir_ / "t.svg", PlotStyle::kSwiss);
  EXPECT_TRUE(fs::exists(dir_ / "t.svg"));

  write_points_csv(dir_ / "h.csv", sample_uniform_box(r, 50, UniformBoxSpec::unit(3)));
  try {
    cmd_plot(dir_ / "h.csv", dir_ / "h.png", PlotStyle::kAuto);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("--columns"), std::string::npos);
  }
  EXPECT_FALSE(fs::exists(dir_ / "h.png"));
  cmd_plot(dir_ / "h.csv", dir_ / "h.png", PlotStyle::kAuto, std::pair<std::size_t, std::size_t>{0, 2});
  EXPECT_TRUE(fs::exists(dir_ / "h.png"));

  const auto empty = write("e.csv", "x0,x1\n");
  EXPECT_THROW(cmd_plot(empty, dir_ / "e.png", PlotStyle::kAuto), Error);
  EXPECT_FALSE(fs::exists(dir_ / "e.png"));
}

TEST_F(CliTest, BinaryErrorsAreSingleLineWithCode) {
  const auto empty = write("e.csv", "x0\n");
  const std::vector<std::pair<std::string, std::string>> cases{
      {"label --data " + empty.string() + " --out " + (dir_ / "o.csv").string(), "error[E_EMPTY]: "},
      {"sample --model " + (dir_ / "nope.bin").string(), "error[E_IO]: "},
      {"run --experiment nonsense", "error[E_CONFIG]: "},
      {"run --experiment custom --out-dir " + dir_.string(), "error[E_CONFIG]: "},
      {"eval --experiment custom --data " + empty.string(), "error[E_"},
      {"frobnicate", "error[E_USAGE]: "},
      {"run --n-train abc", "error[E_USAGE]: "},
  };
  for (const auto& [args, prefix] : cases) {
    const auto res = run_lab(args, dir_);
    EXPECT_NE(res.status, 0) << args;
    EXPECT_EQ(res.err.rfind(prefix, 0), 0u) << args << " -> " << res.err;
    ASSERT_FALSE(res.err.empty());
    EXPECT_EQ(res.err.find('\n'), res.err.size() - 1) << args << " -> " << res.err;
  }
}

TEST_F(CliTest, BinaryConfigFileWithFlagOverride) {
  auto cfg = tiny_swiss(dir_ / "ignored");
  write("cfg.json", cfg.to_json().dump());
  const auto res = run_lab("run --config " + (dir_ / "cfg.json").string() + " --out-dir " + (dir_ / "out").string() +
                               " --seed 11",
                           dir_);
  ASSERT_EQ(res.status, 0) << res.err;
  const auto manifest = nlohmann::json::parse(slurp(dir_ / "out" / "manifest.json"));
  EXPECT_EQ(manifest.at("config").at("seed"), 11);
  EXPECT_EQ(manifest.at("config").at("n_train"), 2000);
}
