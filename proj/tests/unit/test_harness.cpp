#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "schrolab/harness.hpp"

using namespace schrolab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("schrolab-harness-" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::size_t line_count(const fs::path& p) {
  std::ifstream f(p);
  std::size_t n = 0;
  for (std::string l; std::getline(f, l);) ++n;
  return n;
}

ExperimentConfig small_phase(unsigned workers) {
  auto c = ExperimentConfig::parse(
      "experiment = phase-marginal  # comment\n"
      "paths = 40\n"
      "dt = 1e-3\n"
      "master_seed = 9\n");
  c.workers = workers;
  return c;
}

std::string config_error_key(const std::string& text) {
  try {
    ExperimentConfig::parse(text).validate();
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "";
}

}  // namespace

TEST(Config, ParsesOverDefaults) {
  const auto c = small_phase(1);
  EXPECT_EQ(c.experiment, "phase-marginal");
  EXPECT_EQ(c.paths, 40u);
  EXPECT_EQ(c.dt, 1e-3);
  EXPECT_EQ(c.lambda, 3.0);  // experiment default
  const auto g = ExperimentConfig::parse("experiment = gap\nlambda_grid = 1, 2.5\nwindows = 0:1,2:3\n");
  EXPECT_EQ(g.lambda_grid, (std::vector<double>{1.0, 2.5}));
  ASSERT_EQ(g.windows.size(), 2u);
  EXPECT_EQ(g.windows[1].second, 3.0);
  EXPECT_EQ(ExperimentConfig::parse("experiment = gap\npaths = 1e6\n").paths, 1000000u);
}

TEST(Config, RejectsNamingTheKey) {
  EXPECT_EQ(config_error_key("E = 2\n"), "E");
  EXPECT_EQ(config_error_key("E = -2.5\n"), "E");
  EXPECT_EQ(config_error_key("dt = 0\n"), "dt");
  EXPECT_EQ(config_error_key("paths = 0\n"), "paths");
  EXPECT_EQ(config_error_key("bogus = 1\n"), "bogus");
  EXPECT_EQ(config_error_key("sigma = abc\n"), "sigma");
  EXPECT_EQ(config_error_key("experiment = nope\n"), "experiment");
  EXPECT_EQ(config_error_key("experiment = bounds\nomega = rademacher\n"), "omega");
  EXPECT_EQ(config_error_key("experiment = gap\nlambda_grid = 6, 4\n"), "lambda_grid");
  EXPECT_EQ(config_error_key("E = 1.5\n"), "");
}

TEST(Config, HashCoversResultKeysOnly) {
  auto a = small_phase(1), b = small_phase(4);
  b.output_dir = "elsewhere";
  EXPECT_EQ(a.hash(), b.hash());
  b.dt = 5e-4;
  EXPECT_NE(a.hash(), b.hash());
  const auto round = ExperimentConfig::parse(a.to_text());
  EXPECT_EQ(round.hash(), a.hash());
}

TEST(Run, ZeroNoiseSpectrumPasses) {
  const auto res = run_experiment(ExperimentConfig::defaults("zero-noise-spectrum"));
  EXPECT_TRUE(res.manifest.verdict);
  ASSERT_EQ(res.reports.size(), 2u);
  EXPECT_LT(res.reports[0].estimate, 1e-9);
}

TEST(Run, DeterministicAcrossWorkerCounts) {
  auto a = small_phase(1), b = small_phase(3);
  a.output_dir = scratch("det-a").string();
  b.output_dir = scratch("det-b").string();
  const auto ra = run_experiment(a), rb = run_experiment(b);
  ASSERT_EQ(ra.reports.size(), rb.reports.size());
  for (std::size_t i = 0; i < ra.reports.size(); ++i) {
    EXPECT_EQ(ra.reports[i].to_json().dump(), rb.reports[i].to_json().dump());
  }
  auto ma = ra.manifest.to_json(), mb = rb.manifest.to_json();
  for (auto* m : {&ma, &mb}) {
    m->erase("wall_clock_seconds");
    (*m)["config"].erase("output_dir");
    (*m)["config"].erase("workers");
  }
  EXPECT_EQ(ma.dump(), mb.dump());
  EXPECT_EQ(slurp(fs::path(a.output_dir) / "data/phase.csv"),
            slurp(fs::path(b.output_dir) / "data/phase.csv"));
  EXPECT_TRUE(fs::exists(fs::path(a.output_dir) / "manifest.json"));
  EXPECT_TRUE(fs::exists(fs::path(a.output_dir) / "reports/phase-mean.json"));
}

TEST(Replay, ReproducesTaskAndFlagsConfigChanges) {
  auto c = small_phase(2);
  c.output_dir = scratch("replay").string();
  run_experiment(c);
  const auto m = RunManifest::load(c.output_dir);
  EXPECT_EQ(m.config_hash, c.hash());
  const auto r = replay(m, c, TaskId::parse("tape:7"));
  EXPECT_TRUE(r.config_matches);
  // Row 7 of the phase data holds the same value.
  std::ifstream f(fs::path(c.output_dir) / "data/phase.csv");
  std::string line;
  for (int i = 0; i <= 8; ++i) std::getline(f, line);
  EXPECT_EQ(std::stod(line.substr(line.find(',') + 1)), r.output.at(0));
  auto c1 = c;
  c1.workers = 1;
  EXPECT_EQ(replay(m, c1, TaskId::parse("tape:7")).output, r.output);
  auto c2 = c;
  c2.dt = 5e-4;
  const auto r2 = replay(m, c2, TaskId::parse("tape:7"));
  EXPECT_FALSE(r2.config_matches);
  EXPECT_NE(r2.output, r.output);
  EXPECT_THROW(replay(m, c, TaskId::parse("tape:40")), std::invalid_argument);
  EXPECT_THROW(replay(m, c, TaskId::parse("nope:0")), std::invalid_argument);
  EXPECT_THROW(TaskId::parse("tape"), std::invalid_argument);
}

TEST(Replay, ReproducesExplosionStep) {
  auto c = ExperimentConfig::parse("experiment = repulsion\npaths = 30\ndt = 1e-3\neps = 6\n");
  c.dt_check = false;
  c.output_dir = scratch("explode").string();
  run_experiment(c);
  std::ifstream f(fs::path(c.output_dir) / "data/repulsion_events.csv");
  std::string line;
  std::getline(f, line);
  bool found = false;
  while (std::getline(f, line)) {
    std::vector<double> v;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) v.push_back(std::stod(cell));
    if (v[3] != 1.0) continue;
    found = true;
    const auto r = replay(RunManifest::load(c.output_dir), c,
                          TaskId{"tape", static_cast<std::size_t>(v[0])});
    EXPECT_EQ(r.output.at(1), 1.0);
    EXPECT_EQ(r.output.at(2), v[4]);
    break;
  }
  EXPECT_TRUE(found);
}

TEST(Run, TaskFailureRecordsSeed) {
  // A unit step throws the carousel out of the disk.
  auto c = ExperimentConfig::parse("experiment = carousel\npaths = 50\ndt = 1\n");
  c.output_dir = scratch("fail").string();
  const auto res = run_experiment(c);
  ASSERT_TRUE(res.manifest.failure.has_value());
  EXPECT_FALSE(res.manifest.verdict);
  const auto& f = *res.manifest.failure;
  EXPECT_EQ(f.task.arm, "carousel");
  EXPECT_EQ(f.seed.stream_id, (std::uint64_t{12} << 40) | f.task.index);
  EXPECT_NE(f.message.find("left the disk"), std::string::npos);
  const auto m = RunManifest::load(c.output_dir);
  ASSERT_TRUE(m.failure.has_value());
  EXPECT_EQ(m.failure->seed, f.seed);
  EXPECT_THROW(replay(m, c, f.task), NumericalError);
}

TEST(PlotData, PhaseSurfaceShape) {
  auto c = ExperimentConfig::parse("experiment = phase-surface\ntau = 0.5\ndt = 1e-3\n");
  c.output_dir = scratch("surface").string();
  const auto res = run_experiment(c);
  EXPECT_TRUE(res.manifest.verdict);
  const auto csv = fs::path(c.output_dir) / "data/phase_surface.csv";
  EXPECT_EQ(line_count(csv), 8101u);
  const auto out = emit_plot_data({csv}, fs::path(c.output_dir) / "plots");
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(line_count(out[0]), 8101u);
  std::ifstream f(out[0]);
  std::string header;
  std::getline(f, header);
  EXPECT_EQ(header, "# t lambda phi");
}

TEST(PlotData, IntensityHistogramAndTheta) {
  auto c = ExperimentConfig::parse("experiment = intensity\npaths = 300\ndt = 1e-3\n");
  c.output_dir = scratch("intensity").string();
  run_experiment(c);
  const auto out =
      emit_plot_data({fs::path(c.output_dir) / "reports/intensity.json"}, fs::path(c.output_dir) / "plots");
  ASSERT_GE(out.size(), 2u);
  EXPECT_EQ(line_count(out[0]), 25u);  // header + 24 bins
  EXPECT_EQ(line_count(out[1]), 202u);
  try {
    emit_plot_data({fs::path(c.output_dir) / "reports/absent.json"}, fs::path(c.output_dir));
    FAIL() << "missing input accepted";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("absent.json"), std::string::npos);
  }
}
