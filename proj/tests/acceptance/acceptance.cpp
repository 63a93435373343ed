// Acceptance runner: one criterion per invocation, or all of them with --all.
// Prints one PASS/FAIL line per criterion and exits 0 iff every run passed.
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "schrolab/harness.hpp"

using namespace schrolab;

namespace {

struct Criterion {
  int id;
  const char* experiment;
  double budget_seconds;  // stated runtime budget, 0 when none
  const char* summary;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> c = {
      {1, "zero-noise-spectrum", 1, "free spectrum and sine eigenvectors at n = 2000"},
      {2, "oracle-agreement", 30, "Sturm, oscillation and secular oracles agree"},
      {3, "phase-marginal", 300, "phi^3(1) has mean 3 and variance 3/2"},
      {4, "derivative-identities", 120, "E varpi(1) = 1 and the exponential functional law"},
      {5, "intensity", 1800, "theta-density intensity and unit mean count per period"},
      {6, "repulsion", 3600, "two-point repulsion bounds and log-log slope above 3"},
      {7, "clt", 600, "covariance of (phi^0, phi^200 - 200)"},
      {8, "sine-beta", 3600, "Sine_2 density and log-variance"},
      {9, "time-change", 0, "decaying model under the time change equals sine-beta"},
      {10, "carousel", 3600, "carousel counts against shifted Sch_tau"},
      {11, "discrete-to-continuum", 7200, "discrete counts approach Sch_tau counts"},
      {12, "invariance", 0, "phi^(l - th)(t) + th t has the law of phi^l(t)"},
      {13, "conservation", 0, "first-order convergence and conserved quantities"},
      {14, "gap", 14400, "gap probability at leading order"},
      {15, "bounds", 0, "Wegner-Minami bounds and delocalization rates"},
  };
  return c;
}

int run_one(const Criterion& c, const std::string& out_root, double scale) {
  ExperimentConfig cfg = ExperimentConfig::defaults(c.experiment);
  if (scale != 1.0) {
    cfg.paths = std::max<std::size_t>(
        cfg.experiment == "zero-noise-spectrum" ? 1 : 2,
        static_cast<std::size_t>(std::llround(double(cfg.paths) * scale)));
  }
  cfg.output_dir = out_root + "/criterion-" + std::to_string(c.id) + "-" + c.experiment;
  const auto start = std::chrono::steady_clock::now();
  const auto res = run_experiment(cfg);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  for (const auto& r : res.reports) {
    std::cout << "    " << (r.verdict ? "pass " : "fail ") << r.name << ": estimate " << r.estimate;
    if (!std::isnan(r.stderr_)) std::cout << " +- " << r.stderr_;
    if (!std::isnan(r.reference)) std::cout << ", reference " << r.reference;
    if (!std::isnan(r.p_value)) std::cout << ", p " << r.p_value;
    std::cout << ", n " << r.n << "\n";
  }
  if (res.manifest.failure) {
    const auto& f = *res.manifest.failure;
    std::cout << "    aborted in task " << f.task.str() << " (stream " << f.seed.stream_id
              << "): " << f.message << "\n";
  }
  const bool ok = res.manifest.verdict;
  std::cout << (ok ? "PASS" : "FAIL") << " criterion " << c.id << " [" << c.experiment << "] "
            << c.summary << " (" << secs << " s";
  if (c.budget_seconds > 0) {
    std::cout << ", budget " << c.budget_seconds << " s"
              << (secs > c.budget_seconds ? " exceeded" : "");
  }
  if (scale != 1.0) std::cout << ", paths scaled by " << scale;
  std::cout << ")" << std::endl;
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  std::string out_root = "acceptance-runs";
  double scale = 1.0;
  std::vector<int> ids;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--all") {
      for (const auto& c : criteria()) ids.push_back(c.id);
    } else if (a == "--out" && i + 1 < argc) {
      out_root = argv[++i];
    } else if (a == "--scale" && i + 1 < argc) {
      scale = std::atof(argv[++i]);
    } else {
      ids.push_back(std::atoi(a.c_str()));
    }
  }
  if (ids.empty() || scale <= 0.0) {
    std::cerr << "usage: schrolab_acceptance [--out DIR] [--scale F] (--all | ID...)\n";
    return 2;
  }
  int failed = 0;
  for (int id : ids) {
    bool found = false;
    for (const auto& c : criteria()) {
      if (c.id != id) continue;
      found = true;
      try {
        failed += run_one(c, out_root, scale);
      } catch (const std::exception& e) {
        std::cout << "FAIL criterion " << id << " [" << c.experiment << "] error: " << e.what()
                  << std::endl;
        ++failed;
      }
    }
    if (!found) {
      std::cerr << "unknown criterion " << id << "\n";
      return 2;
    }
  }
  return failed == 0 ? 0 : 1;
}
