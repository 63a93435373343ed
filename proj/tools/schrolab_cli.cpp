// Command-line front end for the experiment harness.
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "schrolab/harness.hpp"

namespace fs = std::filesystem;
using namespace schrolab;

namespace {

struct RunCommand {
  std::string name;
  std::string description;
  std::vector<std::string> experiments;  // first is the default
};

const std::vector<RunCommand>& run_commands() {
  static const std::vector<RunCommand> c = {
      {"simulate-operator", "Discrete operator experiments",
       {"zero-noise-spectrum", "oracle-agreement", "discrete-to-continuum", "bounds", "q-trace"}},
      {"simulate-sde", "Continuum SDE experiments",
       {"phase-marginal", "derivative-identities", "clt", "invariance", "time-change",
        "conservation", "phase-surface"}},
      {"sample-sch", "Sch_tau point process experiments",
       {"sch-points", "intensity", "repulsion", "gap"}},
      {"sample-sineb", "Sine_beta experiments", {"sineb-counts", "sine-beta"}},
      {"carousel", "Carousel against the shifted Sch_tau", {"carousel"}},
  };
  return c;
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + v[i];
  return s;
}

// One --<key> option per config key; values are applied after the config file.
struct Overrides {
  std::map<std::string, std::string> values;

  void attach(CLI::App* app) {
    for (const auto& k : ExperimentConfig::keys()) {
      app->add_option_function<std::string>(
          "--" + k, [this, k](const std::string& v) { values[k] = v; }, "config key " + k);
    }
  }
  void apply(ExperimentConfig& c) const {
    for (const auto& [k, v] : values) {
      if (k != "experiment") c.set(k, v);
    }
  }
};

ExperimentConfig build_config(const std::string& file, const Overrides& o,
                              const std::string& default_experiment) {
  ExperimentConfig c;
  if (!file.empty()) {
    c = ExperimentConfig::load(file);
  } else {
    const auto it = o.values.find("experiment");
    c = ExperimentConfig::defaults(it == o.values.end() ? default_experiment : it->second);
  }
  if (!file.empty() && o.values.count("experiment")) {
    c.set("experiment", o.values.at("experiment"));
  }
  o.apply(c);
  return c;
}

void print_report_line(const StatReport& r) {
  std::cout << (r.verdict ? "PASS " : "FAIL ") << r.name << "  estimate=" << r.estimate;
  if (!std::isnan(r.stderr_)) std::cout << " stderr=" << r.stderr_;
  if (!std::isnan(r.reference)) std::cout << " reference=" << r.reference;
  if (!std::isnan(r.p_value)) std::cout << " p=" << r.p_value;
  std::cout << " n=" << r.n << "\n";
}

int run(const RunCommand& cmd, const std::string& file, const Overrides& o) {
  ExperimentConfig c = build_config(file, o, cmd.experiments.front());
  if (std::find(cmd.experiments.begin(), cmd.experiments.end(), c.experiment) ==
      cmd.experiments.end()) {
    throw ConfigError("experiment", "'" + c.experiment + "' is not available under " + cmd.name +
                                        " (choose from " + join(cmd.experiments) + ")");
  }
  if (c.output_dir.empty()) c.output_dir = "runs/" + c.experiment + "-" + c.hash();
  const auto res = run_experiment(c);
  for (const auto& r : res.reports) print_report_line(r);
  if (res.manifest.failure) {
    const auto& f = *res.manifest.failure;
    std::cout << "ABORTED task " << f.task.str() << " seed (" << f.seed.master_seed << ", "
              << f.seed.stream_id << "): " << f.message << "\n";
  }
  std::cout << "run directory: " << c.output_dir << "\n";
  std::cout << "verdict: " << (res.manifest.verdict ? "pass" : "fail") << "\n";
  return res.manifest.verdict ? 0 : 1;
}

// Integer column of a CSV with a header row.
std::vector<long> read_column(const std::string& file, const std::string& name) {
  std::ifstream f(file);
  if (!f) throw std::invalid_argument("missing input: " + file);
  std::string line;
  if (!std::getline(f, line)) throw std::invalid_argument("empty file: " + file);
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw std::invalid_argument(file + " has no column '" + name + "'");
  const auto j = static_cast<std::size_t>(it - header.begin());
  std::vector<long> out;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    for (std::size_t i = 0; i <= j && std::getline(ss, cell, ','); ++i) {
    }
    out.push_back(std::lround(std::stod(cell)));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Critical random Schroedinger operators: simulation and verification"};
  app.require_subcommand(1);
  std::string experiments_help = "Experiments: " + join(experiment_names());
  app.footer(experiments_help);

  std::vector<std::pair<CLI::App*, const RunCommand*>> runs;
  std::vector<std::unique_ptr<Overrides>> overrides;
  std::vector<std::unique_ptr<std::string>> config_files;
  for (const auto& cmd : run_commands()) {
    auto* sub = app.add_subcommand(cmd.name, cmd.description + " (" + join(cmd.experiments) + ")");
    config_files.push_back(std::make_unique<std::string>());
    sub->add_option("--config", *config_files.back(), "key = value config file");
    overrides.push_back(std::make_unique<Overrides>());
    overrides.back()->attach(sub);
    runs.emplace_back(sub, &cmd);
  }

  auto* cmp = app.add_subcommand("compare", "Two-sample comparison of integer count columns");
  std::string fa, fb, col = "count", cmp_out;
  cmp->add_option("--a", fa, "first CSV")->required();
  cmp->add_option("--b", fb, "second CSV")->required();
  cmp->add_option("--column", col, "column name in both files");
  cmp->add_option("--output", cmp_out, "write the report JSON here");

  auto* rep = app.add_subcommand("report", "Summarize a run and emit plot data");
  std::string rep_dir;
  rep->add_option("--run-dir", rep_dir, "run directory")->required();

  auto* rpl = app.add_subcommand("replay", "Re-execute one task of a recorded run");
  std::string rpl_dir, rpl_task;
  rpl->add_option("--run-dir", rpl_dir, "run directory")->required();
  rpl->add_option("--task", rpl_task, "task id arm:index")->required();
  Overrides rpl_over;
  rpl_over.attach(rpl);

  CLI11_PARSE(app, argc, argv);

  try {
    for (std::size_t i = 0; i < runs.size(); ++i) {
      if (runs[i].first->parsed()) return run(*runs[i].second, *config_files[i], *overrides[i]);
    }
    if (cmp->parsed()) {
      const auto r = compare_distributions(read_column(fa, col), read_column(fb, col));
      print_report_line(r);
      if (!cmp_out.empty()) std::ofstream(cmp_out) << r.to_json().dump(2) << "\n";
      return r.verdict ? 0 : 1;
    }
    if (rep->parsed()) {
      const fs::path dir(rep_dir);
      const auto m = RunManifest::load(dir);
      std::cout << "experiment " << m.experiment << "  config " << m.config_hash << "  version "
                << m.code_version << "  wall clock " << m.wall_clock_seconds << " s\n";
      std::vector<fs::path> inputs;
      for (const auto& r : m.reports) {
        std::cout << (r.verdict ? "PASS " : "FAIL ") << r.name << "  (" << r.file << ")\n";
        inputs.push_back(dir / r.file);
      }
      for (const auto& d : m.data_files) inputs.push_back(dir / d);
      if (m.failure) {
        std::cout << "ABORTED task " << m.failure->task.str() << ": " << m.failure->message
                  << "\n";
      }
      for (const auto& p : emit_plot_data(inputs, dir / "plots")) {
        std::cout << "plot data: " << p.string() << "\n";
      }
      std::cout << "verdict: " << (m.verdict ? "pass" : "fail") << "\n";
      return m.verdict ? 0 : 1;
    }
    if (rpl->parsed()) {
      const auto m = RunManifest::load(rpl_dir);
      ExperimentConfig c = ExperimentConfig::defaults(m.experiment);
      for (const auto& [k, v] : m.config) c.set(k, v);
      rpl_over.apply(c);
      const auto r = replay(m, c, TaskId::parse(rpl_task));
      nlohmann::json j = {{"task", r.task.str()},
                          {"seed", {{"master_seed", r.seed.master_seed},
                                    {"stream_id", r.seed.stream_id}}},
                          {"config_matches", r.config_matches},
                          {"output", r.output}};
      std::cout << j.dump(2) << "\n";
      if (!r.config_matches) {
        std::cerr << "warning: config hash " << c.hash() << " does not match the manifest ("
                  << m.config_hash << ")\n";
        return 1;
      }
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "invalid config key '" << e.key() << "': " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
