#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "schrolab/operator_model.hpp"
#include "schrolab/point_process.hpp"
#include "schrolab/randomness.hpp"

namespace schrolab {

inline constexpr std::string_view kCodeVersion = "0.1.0";

// Invalid configuration; key() names the offending key.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::invalid_argument(key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

// Flat key = value configuration. Every key has a default that depends on the
// experiment; see ExperimentConfig::defaults.
struct ExperimentConfig {
  std::string experiment = "zero-noise-spectrum";
  // Discrete model.
  double E = 1.0;
  double sigma = 1.0;
  std::size_t n = 500;
  OmegaKind omega = OmegaKind::gaussian;
  PotentialModel model = PotentialModel::critical;
  double R = 20.0;
  ShiftConvention shift = ShiftConvention::lattice;
  std::vector<std::size_t> n_list;
  bool align_n = true;
  // Continuum.
  double dt = 1e-4;
  double tau = 1.0;
  double beta = 2.0;
  double Tmax = 0.0;  // 0 selects the default truncation
  double delta = 1e-3;
  double lambda = 0.0;
  double theta = 0.0;
  double t = 1.0;
  // Sampling.
  std::size_t paths = 1000;
  std::uint64_t master_seed = 1;
  std::vector<double> lambda_grid;
  std::vector<std::pair<double, double>> windows;
  std::vector<double> eps;
  std::vector<double> deloc_t;
  bool dt_check = true;
  // Execution; neither affects results nor the config hash.
  unsigned workers = 0;  // 0: available cores
  std::string output_dir;

  // Defaults for a named experiment; throws ConfigError("experiment") if unknown.
  static ExperimentConfig defaults(std::string_view experiment);

  // Parses "key = value" lines ('#' starts a comment). The experiment key is
  // applied first so the remaining keys override that experiment's defaults.
  static ExperimentConfig parse(std::string_view text);
  static ExperimentConfig load(const std::filesystem::path& file);

  void set(std::string_view key, std::string_view value);
  std::string get(std::string_view key) const;
  static const std::vector<std::string>& keys();

  // Throws ConfigError naming the first invalid key.
  void validate() const;

  // Sorted key=value lines of every result-affecting key.
  std::string canonical() const;
  // 64-bit FNV-1a of canonical(), as 16 hex digits.
  std::string hash() const;
  std::string to_text() const;

  unsigned effective_workers() const;
};

std::vector<std::string> experiment_names();

// Experiments with no statistical verdict; they only emit data files.
bool is_data_experiment(std::string_view name);

struct TaskId {
  std::string arm;
  std::size_t index = 0;

  std::string str() const;
  static TaskId parse(std::string_view text);
};

struct TaskFailure {
  TaskId task;
  SeedSpec seed;
  std::string message;
};

struct ReportRef {
  std::string name;
  std::string file;  // relative to the run directory
  bool verdict = false;
};

struct RunManifest {
  std::string experiment;
  std::string config_hash;
  std::string code_version{kCodeVersion};
  double wall_clock_seconds = 0.0;
  std::map<std::string, std::string> config;
  std::vector<ReportRef> reports;
  std::vector<std::string> data_files;
  bool verdict = false;
  std::optional<TaskFailure> failure;

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
  static RunManifest load(const std::filesystem::path& run_dir);
};

struct ExperimentResult {
  RunManifest manifest;
  std::vector<StatReport> reports;
  std::map<std::string, std::string> data;  // file name -> CSV contents
};

// Validates, runs every task of the experiment on config.workers threads,
// reduces to reports and writes manifest.json, reports/*.json and data/*.csv
// under output_dir when it is set. A failing task aborts the experiment; the
// manifest then records its id and seed and the verdict is fail.
ExperimentResult run_experiment(const ExperimentConfig& config);

struct ReplayResult {
  TaskId task;
  SeedSpec seed;
  std::vector<double> output;
  bool config_matches = true;  // config hash equals the manifest's
};

// Re-executes one task. Throws std::invalid_argument for an unknown task id.
ReplayResult replay(const RunManifest& manifest, const ExperimentConfig& config,
                    const TaskId& task);

// Gnuplot-ready .dat files for every report that carries plottable rows.
// Throws std::invalid_argument naming a missing input.
std::vector<std::filesystem::path> emit_plot_data(
    const std::vector<std::filesystem::path>& reports, const std::filesystem::path& out_dir);

}  // namespace schrolab
