#include "schrolab/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "schrolab/parallel.hpp"
#include "schrolab/sde.hpp"
#include "schrolab/stats.hpp"
#include "schrolab/transfer.hpp"

namespace schrolab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// ---------------------------------------------------------------------------
// Value formatting and parsing.

std::string fmt(double x) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  const std::string t = trim(s);
  if (t.empty()) return out;
  std::size_t start = 0;
  for (;;) {
    const auto p = t.find(sep, start);
    out.push_back(trim(std::string_view(t).substr(start, p - start)));
    if (p == std::string::npos) break;
    start = p + 1;
  }
  return out;
}

double to_double(const std::string& key, std::string_view v) {
  const std::string t = trim(v);
  double x = 0.0;
  auto r = std::from_chars(t.data(), t.data() + t.size(), x);
  if (t.empty() || r.ec != std::errc() || r.ptr != t.data() + t.size() || !std::isfinite(x)) {
    throw ConfigError(key, "not a number: '" + t + "'");
  }
  return x;
}

std::uint64_t to_uint(const std::string& key, std::string_view v) {
  const std::string t = trim(v);
  std::uint64_t x = 0;
  auto r = std::from_chars(t.data(), t.data() + t.size(), x);
  if (t.empty() || r.ec != std::errc() || r.ptr != t.data() + t.size()) {
    // Accept integral values written in floating notation, such as 1e6.
    double d = 0.0;
    auto rd = std::from_chars(t.data(), t.data() + t.size(), d);
    if (rd.ec == std::errc() && rd.ptr == t.data() + t.size() && d >= 0.0 && d < 1.8e19 &&
        std::floor(d) == d) {
      return static_cast<std::uint64_t>(d);
    }
    throw ConfigError(key, "not a non-negative integer: '" + t + "'");
  }
  return x;
}

bool to_bool(const std::string& key, std::string_view v) {
  const std::string t = trim(v);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError(key, "not a boolean: '" + t + "'");
}

std::vector<double> to_doubles(const std::string& key, std::string_view v) {
  std::vector<double> out;
  for (const auto& s : split(v, ',')) out.push_back(to_double(key, s));
  return out;
}

std::string join(const std::vector<double>& x) {
  std::string s;
  for (std::size_t i = 0; i < x.size(); ++i) s += (i ? "," : "") + fmt(x[i]);
  return s;
}

// ---------------------------------------------------------------------------
// Config key table.

struct KeySpec {
  const char* name;
  bool hashed;
  std::function<void(ExperimentConfig&, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define DOUBLE_KEY(k)                                                                  \
  KeySpec {                                                                            \
    #k, true, [](ExperimentConfig& c, std::string_view v) { c.k = to_double(#k, v); }, \
        [](const ExperimentConfig& c) { return fmt(c.k); }                             \
  }
#define LIST_KEY(k)                                                                     \
  KeySpec {                                                                             \
    #k, true, [](ExperimentConfig& c, std::string_view v) { c.k = to_doubles(#k, v); }, \
        [](const ExperimentConfig& c) { return join(c.k); }                             \
  }

const std::vector<KeySpec>& key_table() {
  static const std::vector<KeySpec> table = {
      {"experiment", true,
       [](ExperimentConfig& c, std::string_view v) {
         const std::string name = trim(v);
         const auto names = experiment_names();
         if (std::find(names.begin(), names.end(), name) == names.end()) {
           throw ConfigError("experiment", "unknown experiment '" + name + "'");
         }
         c.experiment = name;
       },
       [](const ExperimentConfig& c) { return c.experiment; }},
      DOUBLE_KEY(E),
      DOUBLE_KEY(sigma),
      {"n", true, [](ExperimentConfig& c, std::string_view v) { c.n = to_uint("n", v); },
       [](const ExperimentConfig& c) { return std::to_string(c.n); }},
      {"omega", true,
       [](ExperimentConfig& c, std::string_view v) {
         try {
           c.omega = parse_omega_kind(trim(v));
         } catch (const std::exception& e) {
           throw ConfigError("omega", e.what());
         }
       },
       [](const ExperimentConfig& c) { return std::string(to_string(c.omega)); }},
      {"model", true,
       [](ExperimentConfig& c, std::string_view v) {
         try {
           c.model = parse_potential_model(trim(v));
         } catch (const std::exception& e) {
           throw ConfigError("model", e.what());
         }
       },
       [](const ExperimentConfig& c) { return std::string(to_string(c.model)); }},
      DOUBLE_KEY(R),
      {"shift", true,
       [](ExperimentConfig& c, std::string_view v) {
         try {
           c.shift = parse_shift_convention(trim(v));
         } catch (const std::exception& e) {
           throw ConfigError("shift", e.what());
         }
       },
       [](const ExperimentConfig& c) { return std::string(to_string(c.shift)); }},
      {"n_list", true,
       [](ExperimentConfig& c, std::string_view v) {
         c.n_list.clear();
         for (const auto& s : split(v, ',')) c.n_list.push_back(to_uint("n_list", s));
       },
       [](const ExperimentConfig& c) {
         std::string s;
         for (std::size_t i = 0; i < c.n_list.size(); ++i) {
           s += (i ? "," : "") + std::to_string(c.n_list[i]);
         }
         return s;
       }},
      {"align_n", true,
       [](ExperimentConfig& c, std::string_view v) { c.align_n = to_bool("align_n", v); },
       [](const ExperimentConfig& c) { return std::string(c.align_n ? "true" : "false"); }},
      DOUBLE_KEY(dt),
      DOUBLE_KEY(tau),
      DOUBLE_KEY(beta),
      DOUBLE_KEY(Tmax),
      DOUBLE_KEY(delta),
      DOUBLE_KEY(lambda),
      DOUBLE_KEY(theta),
      DOUBLE_KEY(t),
      {"paths", true,
       [](ExperimentConfig& c, std::string_view v) { c.paths = to_uint("paths", v); },
       [](const ExperimentConfig& c) { return std::to_string(c.paths); }},
      {"master_seed", true,
       [](ExperimentConfig& c, std::string_view v) { c.master_seed = to_uint("master_seed", v); },
       [](const ExperimentConfig& c) { return std::to_string(c.master_seed); }},
      LIST_KEY(lambda_grid),
      {"windows", true,
       [](ExperimentConfig& c, std::string_view v) {
         c.windows.clear();
         for (const auto& s : split(v, ',')) {
           const auto ab = split(s, ':');
           if (ab.size() != 2) throw ConfigError("windows", "expected a:b, got '" + s + "'");
           c.windows.emplace_back(to_double("windows", ab[0]), to_double("windows", ab[1]));
         }
       },
       [](const ExperimentConfig& c) {
         std::string s;
         for (std::size_t i = 0; i < c.windows.size(); ++i) {
           s += (i ? "," : "") + fmt(c.windows[i].first) + ":" + fmt(c.windows[i].second);
         }
         return s;
       }},
      LIST_KEY(eps),
      LIST_KEY(deloc_t),
      {"dt_check", true,
       [](ExperimentConfig& c, std::string_view v) { c.dt_check = to_bool("dt_check", v); },
       [](const ExperimentConfig& c) { return std::string(c.dt_check ? "true" : "false"); }},
      {"workers", false,
       [](ExperimentConfig& c, std::string_view v) {
         c.workers = static_cast<unsigned>(to_uint("workers", v));
       },
       [](const ExperimentConfig& c) { return std::to_string(c.workers); }},
      {"output_dir", false,
       [](ExperimentConfig& c, std::string_view v) { c.output_dir = trim(v); },
       [](const ExperimentConfig& c) { return c.output_dir; }},
  };
  return table;
}

#undef DOUBLE_KEY
#undef LIST_KEY

const KeySpec& find_key(std::string_view key) {
  for (const auto& k : key_table()) {
    if (key == k.name) return k;
  }
  throw ConfigError(std::string(key), "unknown key");
}

std::vector<double> linspace(double a, double b, std::size_t m) {
  std::vector<double> x(m);
  for (std::size_t i = 0; i < m; ++i) x[i] = a + (b - a) * double(i) / double(m - 1);
  return x;
}

// ---------------------------------------------------------------------------
// Task plans.

using TaskOutput = std::vector<double>;
using TaskFn = std::function<TaskOutput(SeedSpec, int refine)>;

struct Arm {
  std::string name;
  std::uint64_t id = 0;
  std::size_t count = 0;
  int refine = 0;
  TaskFn fn;
};

using ArmResults = std::map<std::string, std::vector<TaskOutput>>;

struct Reduction {
  std::vector<StatReport> reports;
  std::map<std::string, std::string> data;
};

struct Plan {
  std::vector<Arm> arms;
  std::function<Reduction(const ArmResults&)> reduce;
};

std::string half_name(const std::string& arm) { return arm + "@half-dt"; }

SeedSpec task_seed(const ExperimentConfig& c, const Arm& a, std::size_t index) {
  return SeedSpec{c.master_seed, (a.id << 40) | index};
}

// Adds an arm and, when dt checks are on, its dt/2 rerun over the first 10%
// of the same seeds.
void add_arm(Plan& p, const ExperimentConfig& c, std::string name, std::uint64_t id,
             std::size_t count, TaskFn fn, bool statistical = true) {
  p.arms.push_back({name, id, count, 0, fn});
  if (statistical && c.dt_check) {
    const std::size_t k = std::max<std::size_t>(2, (count + 9) / 10);
    p.arms.push_back({half_name(name), id, std::min(k, count), 1, fn});
  }
}

// Tape covering [0, horizon] exactly: dt is adjusted down to horizon / steps.
NoiseTape tape_for(SeedSpec s, double horizon, double dt, ChannelSet ch, int refine) {
  const auto steps = static_cast<std::size_t>(std::max(1.0, std::round(horizon / dt)));
  NoiseTape t = NoiseTape::make(s, horizon / double(steps), steps, ch);
  for (int r = 0; r < refine; ++r) t = t.refined();
  return t;
}

std::vector<double> column(const std::vector<TaskOutput>& rows, std::size_t j,
                           std::size_t limit = SIZE_MAX) {
  std::vector<double> out;
  const std::size_t m = std::min(limit, rows.size());
  out.reserve(m);
  for (std::size_t i = 0; i < m; ++i) out.push_back(rows[i].at(j));
  return out;
}

std::vector<long> long_column(const std::vector<TaskOutput>& rows, std::size_t j) {
  std::vector<long> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(std::lround(r.at(j)));
  return out;
}

// Mean of column j at dt/2 against the same seeds at dt; passes when the
// shift is below one standard error of the dt estimate.
void add_dt_check(Reduction& red, const ArmResults& res, const std::string& arm, std::size_t j,
                  const std::string& what) {
  const auto it = res.find(half_name(arm));
  if (it == res.end()) return;
  const auto half = column(it->second, j);
  const auto base = column(res.at(arm), j, half.size());
  StatReport r;
  r.name = "dt-check-" + arm;
  r.n = half.size();
  r.estimate = stats::mean(half) - stats::mean(base);
  r.stderr_ = stats::stderr_mean(base);
  r.reference = 0.0;
  r.verdict = std::abs(r.estimate) < r.stderr_ || r.estimate == 0.0;
  r.details = {{"statistic", what},
               {"mean_dt", stats::mean(base)},
               {"mean_half_dt", stats::mean(half)}};
  red.reports.push_back(std::move(r));
}

StatReport mean_report(std::string name, std::span<const double> x, double reference,
                       double k_se = 3.0) {
  StatReport r;
  r.name = std::move(name);
  r.n = x.size();
  r.estimate = stats::mean(x);
  r.stderr_ = stats::stderr_mean(x);
  r.reference = reference;
  r.statistic = (r.estimate - reference) / r.stderr_;
  r.verdict = std::abs(r.estimate - reference) <= k_se * r.stderr_;
  r.details = {{"tolerance_se", k_se}};
  return r;
}

StatReport variance_report(std::string name, std::span<const double> x, double reference,
                           double k_se = 3.0) {
  StatReport r;
  r.name = std::move(name);
  r.n = x.size();
  r.estimate = stats::variance(x);
  r.stderr_ = stats::stderr_variance(x);
  r.reference = reference;
  r.statistic = (r.estimate - reference) / r.stderr_;
  r.verdict = std::abs(r.estimate - reference) <= k_se * r.stderr_;
  r.details = {{"tolerance_se", k_se}};
  return r;
}

// CSV builder.
class Csv {
 public:
  explicit Csv(std::string header) { os_ << header << '\n'; }
  template <class... T>
  void row(const T&... xs) {
    bool first = true;
    ((os_ << (first ? "" : ",") << cell(xs), first = false), ...);
    os_ << '\n';
  }
  std::string str() const { return os_.str(); }

 private:
  static std::string cell(double x) { return fmt(x); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  template <class I>
    requires std::is_integral_v<I>
  static std::string cell(I i) { return std::to_string(i); }
  std::ostringstream os_;
};

PotentialSpec potential_spec(const ExperimentConfig& c, std::size_t n) {
  return PotentialSpec{c.model, c.sigma, c.omega, n};
}

// ---------------------------------------------------------------------------
// Experiments.

Plan plan_zero_noise(const ExperimentConfig& c) {
  Plan p;
  add_arm(p, c, "instance", 1, 1,
          [c](SeedSpec, int) -> TaskOutput {
            const std::size_t n = c.n;
            const Hamiltonian H{std::vector<double>(n, 0.0)};
            const SpectralWindow w(c.E, c.R);
            const auto eigs = eigenvalues_in_window(H, w, 1e-14);
            std::vector<double> exact;
            std::vector<std::size_t> modes;
            for (std::size_t k = n; k >= 1; --k) {
              const double mu = 2.0 * std::cos(kPi * double(k) / double(n + 1));
              if (mu >= w.lower(n) && mu <= w.upper(n)) {
                exact.push_back(mu);
                modes.push_back(k);
              }
            }
            double eig_dev = 0.0, vec_err = 0.0;
            const bool same = exact.size() == eigs.size();
            if (same) {
              for (std::size_t i = 0; i < eigs.size(); ++i) {
                eig_dev = std::max(eig_dev, std::abs(eigs[i] - exact[i]));
                const auto psi = eigenvector(H, eigs[i]);
                std::vector<double> s(n);
                double dot = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                  s[j] = std::sqrt(2.0 / double(n + 1)) *
                         std::sin(kPi * double(modes[i]) * double(j + 1) / double(n + 1));
                  dot += s[j] * psi[j];
                }
                const double sign = dot < 0.0 ? -1.0 : 1.0;
                for (std::size_t j = 0; j < n; ++j) {
                  vec_err = std::max(vec_err, std::abs(sign * psi[j] - s[j]));
                }
              }
            }
            return {same ? 1.0 : 0.0, double(exact.size()), double(eigs.size()), eig_dev,
                    vec_err};
          },
          false);
  p.reduce = [c](const ArmResults& res) {
    const auto& o = res.at("instance").at(0);
    Reduction red;
    StatReport e;
    e.name = "zero-noise-eigenvalues";
    e.n = static_cast<std::size_t>(o[1]);
    e.estimate = o[3];
    e.reference = 1e-9;
    e.verdict = o[0] == 1.0 && o[1] > 0 && o[3] < 1e-9;
    e.details = {{"exact_count", o[1]}, {"computed_count", o[2]}, {"n", c.n}, {"E", c.E},
                 {"R", c.R}};
    StatReport v;
    v.name = "zero-noise-eigenvectors";
    v.n = e.n;
    v.estimate = o[4];
    v.reference = 1e-8;
    v.verdict = o[0] == 1.0 && o[1] > 0 && o[4] < 1e-8;
    red.reports = {e, v};
    Csv csv("quantity,value");
    csv.row("exact_count", o[1]);
    csv.row("computed_count", o[2]);
    csv.row("max_eigenvalue_deviation", o[3]);
    csv.row("max_eigenvector_error", o[4]);
    red.data["zero_noise.csv"] = csv.str();
    return red;
  };
  return p;
}

// Point of [lo, hi] where the oscillation count from lo first reaches k + 1.
double locate_by_oscillation(const SpectralWindow& w, std::span<const double> v, double lo,
                             double hi, long k, double tol) {
  double a = lo, b = hi;
  while (b - a > tol) {
    const double m = 0.5 * (a + b);
    (oscillation_count(w, v, lo, m) >= k + 1 ? b : a) = m;
  }
  return 0.5 * (a + b);
}

Plan plan_oracle(const ExperimentConfig& c) {
  Plan p;
  add_arm(p, c, "instance", 2, c.paths,
          [c](SeedSpec s, int) -> TaskOutput {
            const auto v = potential_values(potential_spec(c, c.n), s);
            const Hamiltonian H{v};
            const SpectralWindow w(c.E, c.R);
            std::vector<double> sturm;
            for (double mu : eigenvalues_in_window(H, w, 1e-14)) {
              sturm.push_back(w.to_rescaled(mu, c.n));
            }
            const auto sec = secular_roots(w, v, -c.R, c.R, 1e-9);
            const long osc = oscillation_count(w, v, -c.R, c.R);
            double dev_osc = 0.0, dev_sec = 0.0;
            if (long(sturm.size()) == osc) {
              for (long k = 0; k < osc; ++k) {
                const double x = locate_by_oscillation(w, v, -c.R, c.R, k, 1e-9);
                dev_osc = std::max(dev_osc, std::abs(x - sturm[k]));
              }
            }
            if (sec.size() == sturm.size()) {
              for (std::size_t k = 0; k < sec.size(); ++k) {
                dev_sec = std::max(dev_sec, std::abs(sec[k] - sturm[k]));
              }
            }
            return {double(sturm.size()), double(osc), double(sec.size()), dev_osc, dev_sec};
          },
          false);
  p.reduce = [](const ArmResults& res) {
    const auto& rows = res.at("instance");
    Reduction red;
    std::size_t mismatched = 0;
    double dev = 0.0;
    Csv csv("instance,count_sturm,count_oscillation,count_secular,max_dev_oscillation,"
            "max_dev_secular");
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto& o = rows[i];
      if (o[0] != o[1] || o[0] != o[2]) ++mismatched;
      dev = std::max({dev, o[3], o[4]});
      csv.row(i, o[0], o[1], o[2], o[3], o[4]);
    }
    StatReport r;
    r.name = "oracle-agreement";
    r.n = rows.size();
    r.estimate = dev;
    r.reference = 1e-6;
    r.statistic = double(mismatched);
    r.verdict = mismatched == 0 && dev < 1e-6;
    r.details = {{"count_mismatches", mismatched}, {"max_location_deviation", dev}};
    red.reports.push_back(r);
    red.data["oracle.csv"] = csv.str();
    return red;
  };
  return p;
}

Plan plan_phase_marginal(const ExperimentConfig& c) {
  Plan p;
  add_arm(p, c, "tape", 3, c.paths, [c](SeedSpec s, int refine) -> TaskOutput {
    const auto t = tape_for(s, c.tau, c.dt, ChannelSet::critical(), refine);
    const double grid[1] = {c.lambda};
    double out[1];
    phase_final(PhaseKind::critical, grid, c.tau, t, out);
    return {out[0]};
  });
  p.reduce = [c](const ArmResults& res) {
    const auto phi = column(res.at("tape"), 0);
    Reduction red;
    red.reports.push_back(mean_report("phase-mean", phi, c.lambda * c.tau));
    red.reports.push_back(variance_report("phase-variance", phi, 1.5 * c.tau));
    add_dt_check(red, res, "tape", 0, "mean of phi");
    Csv csv("sample_id,phi");
    for (std::size_t i = 0; i < phi.size(); ++i) csv.row(i, phi[i]);
    red.data["phase.csv"] = csv.str();
    return red;
  };
  return p;
}

Plan plan_derivative(const ExperimentConfig& c) {
  Plan p;
  add_arm(p, c, "derivative", 4, c.paths, [c](SeedSpec s, int refine) -> TaskOutput {
    const auto t = tape_for(s, c.t, c.dt, ChannelSet::critical(), refine);
    return {integrate_derivative(c.lambda, c.t, t).varpi.back()};
  });
  add_arm(p, c, "functional", 5, c.paths, [c](SeedSpec s, int refine) -> TaskOutput {
    const auto t = tape_for(s, c.t, c.dt, {Channel::B}, refine);
    return {sample_derivative_functional(c.t, t)};
  });
  p.reduce = [c](const ArmResults& res) {
    const auto w = column(res.at("derivative"), 0);
    const auto f = column(res.at("functional"), 0);
    Reduction red;
    red.reports.push_back(mean_report("derivative-mean", w, c.t));
    const auto ks = stats::ks_two_sample(w, f);
    StatReport r;
    r.name = "derivative-functional-ks";
    r.n = w.size();
    r.statistic = ks.statistic;
    r.p_value = ks.p_value;
    r.estimate = ks.statistic;
    r.verdict = ks.p_value > 1e-2;
    r.details = {{"alpha", 1e-2}, {"mean_functional", stats::mean(f)}};
    red.reports.push_back(r);
    add_dt_check(red, res, "derivative", 0, "mean of varpi");
    add_dt_check(red, res, "functional", 0, "mean of the functional");
    Csv csv("sample_id,varpi,functional");
    for (std::size_t i = 0; i < w.size(); ++i) csv.row(i, w[i], f[i]);
    red.data["derivative.csv"] = csv.str();
    return red;
  };
  return p;
}

std::pair<double, double> sampling_window(const ExperimentConfig& c) {
  return c.windows.empty() ? std::pair{0.0, 2.0 * kTwoPi} : c.windows.front();
}

// Sch_tau points in the sampling window; output [count in [lo, lo + 2 pi),
// count in [lo + 2 pi, lo + 4 pi), points...].
TaskOutput sch_point_task(const ExperimentConfig& c, SeedSpec s, int refine) {
  const auto [lo, hi] = sampling_window(c);
  const auto t = tape_for(s, c.tau, c.dt, ChannelSet::critical(), refine);
  const auto ps = sample_sch_points(c.tau, lo, hi, t, 1e-4);
  TaskOutput out{0.0, 0.0};
  for (double x : ps.points) {
    if (x < lo + kTwoPi) out[0] += 1.0;
    else if (x < lo + 2.0 * kTwoPi) out[1] += 1.0;
    out.push_back(x);
  }
  return out;
}

Plan plan_intensity(const ExperimentConfig& c) {
  Plan p;
  add_arm(p, c, "sample", 6, c.paths,
          [c](SeedSpec s, int refine) { return sch_point_task(c, s, refine); });
  p.reduce = [c](const ArmResults& res) {
    const auto& rows = res.at("sample");
    std::vector<double> pts;
    std::vector<long> first, second;
    Csv csv("sample_id,point");
    for (std::size_t i = 0; i < rows.size(); ++i) {
      first.push_back(std::lround(rows[i][0]));
      second.push_back(std::lround(rows[i][1]));
      for (std::size_t j = 2; j < rows[i].size(); ++j) {
        pts.push_back(rows[i][j]);
        csv.row(i, rows[i][j]);
      }
    }
    Reduction red;
    auto r = intensity_report(c.tau, pts, first, 24, 1e-3);
    r.details["window"] = {sampling_window(c).first, sampling_window(c).second};
    red.reports.push_back(r);
    const auto [lo, hi] = sampling_window(c);
    if (hi - lo >= 2.0 * kTwoPi - 1e-12) {
      red.reports.push_back(compare_distributions(first, second, "translation-2pi"));
    }
    add_dt_check(red, res, "sample", 0, "mean count in the first 2 pi window");
    red.data["points.csv"] = csv.str();
    Csv hist("center,observed_density,theta_density");
    for (const auto& b : r.details["bins"]) {
      hist.row(b["center"].get<double>(), b["observed_density"].get<double>(),
               b["theta_density"].get<double>());
    }
    red.data["intensity_hist.csv"] = hist.str();
    Csv theta("x,density");
    for (double x : linspace(0.0, kTwoPi, 201)) theta.row(x, theta_density(x, c.tau));
    red.data["theta_density.csv"] = theta.str();
    return red;
  };
  return p;
}

Plan plan_repulsion(const ExperimentConfig& c) {
  Plan p;
  add_arm(p, c, "tape", 7, c.paths, [c](SeedSpec s, int refine) -> TaskOutput {
    const auto t = tape_for(s, c.tau, c.dt, ChannelSet::critical(), refine);
    std::vector<double> lam{0.0};
    lam.insert(lam.end(), c.eps.begin(), c.eps.end());
    const auto phi = sch_phases(c.tau, lam, t);
    const std::size_t m = c.eps.size();
    TaskOutput out(3 * m);
    for (std::size_t i = 0; i < m; ++i) {
      out[i] = phi[i + 1] >= phi[0] ? double(lattice_count(phi[0], phi[i + 1])) : 0.0;
      const auto y = integrate_logtan(c.eps[i], c.tau, t);
      out[m + i] = y.exploded ? 1.0 : 0.0;
      out[2 * m + i] = double(y.stop_step);
    }
    return out;
  });
  p.reduce = [c](const ArmResults& res) {
    const auto& rows = res.at("tape");
    const std::size_t m = c.eps.size();
    std::vector<std::vector<long>> counts(m);
    for (std::size_t i = 0; i < m; ++i) counts[i] = long_column(rows, i);
    Reduction red;
    red.reports.push_back(repulsion_report(c.tau, c.eps, counts));
    // The relative phase reaching 2 pi is the explosion of the log-tan process.
    StatReport lt;
    lt.name = "repulsion-logtan";
    lt.n = rows.size();
    lt.details = {{"rows", json::array()}};
    bool ok = true;
    for (std::size_t i = 0; i < m; ++i) {
      const auto ex = column(rows, m + i);
      const double pe = stats::mean(ex);
      const double bs = repulsion_bound_short(c.tau, c.eps[i]);
      const double bl = repulsion_bound_long(c.tau, c.eps[i]);
      double b = kNaN;
      if (!std::isnan(bs)) b = bs;
      if (!std::isnan(bl)) b = std::isnan(b) ? bl : std::min(b, bl);
      const bool holds = std::isnan(b) || pe <= b;
      ok = ok && holds;
      lt.details["rows"].push_back({{"eps", c.eps[i]},
                                    {"p_explode", pe},
                                    {"stderr", stats::stderr_mean(ex)},
                                    {"bound", b},
                                    {"holds", holds}});
      if (i == 0) {
        lt.estimate = pe;
        lt.stderr_ = stats::stderr_mean(ex);
        lt.reference = b;
      }
    }
    lt.verdict = ok;
    red.reports.push_back(lt);
    add_dt_check(red, res, "tape", m - 1, "P(count >= 2) at the largest eps");
    Csv csv("sample_id,eps,count,exploded,stop_step");
    for (std::size_t s = 0; s < rows.size(); ++s) {
      for (std::size_t i = 0; i < m; ++i) {
        if (rows[s][i] >= 2.0 || rows[s][m + i] != 0.0) {
          csv.row(s, c.eps[i], rows[s][i], rows[s][m + i], rows[s][2 * m + i]);
        }
      }
    }
    red.data["repulsion_events.csv"] = csv.str();
    return red;
  };
  return p;
}

Plan plan_clt(const ExperimentConfig& c) {
  Plan p;
  const long k = std::lround(c.lambda / kTwoPi);
  const double lam2 = kTwoPi * double(k) + c.theta;
  add_arm(p, c, "tape", 8, c.paths, [c, k, lam2](SeedSpec s, int refine) -> TaskOutput {
    const auto t = tape_for(s, c.tau, c.dt, ChannelSet::critical(), refine);
    const double grid[3] = {0.0, c.lambda, lam2 / c.tau};
    double phi[3];
    phase_final(PhaseKind::critical, grid, c.tau, t, phi);
    const double cnt = phi[2] >= phi[0] ? double(lattice_count(phi[0], phi[2])) : 0.0;
    return {phi[0], phi[1] - c.lambda * c.tau, cnt - double(k)};
  });
  // Limit law sampled from independent xi0 ~ N(0, tau), xi1, xi2 ~ N(0, tau/2).
  add_arm(
      p, c, "limit", 9, c.paths,
      [c](SeedSpec s, int) -> TaskOutput {
        const VariateStream v(s, purpose::limit_law);
        const double x0 = std::sqrt(c.tau) * v.normal(0);
        const double x1 = std::sqrt(0.5 * c.tau) * v.normal(1);
        const double x2 = std::sqrt(0.5 * c.tau) * v.normal(2);
        return {std::floor((x0 + x2 + c.theta) / kTwoPi) - std::floor((x0 + x1) / kTwoPi)};
      },
      false);
  p.reduce = [c, k, lam2](const ArmResults& res) {
    const auto& rows = res.at("tape");
    const auto phi0 = column(rows, 0), phil = column(rows, 1);
    Reduction red;
    red.reports.push_back(clt_report(c.tau, c.lambda, phi0, phil));
    auto cmp = compare_distributions(long_column(rows, 2), long_column(res.at("limit"), 0),
                                     "clt-floor-law");
    cmp.details["interval_end"] = lam2;
    cmp.details["k"] = k;
    red.reports.push_back(cmp);
    add_dt_check(red, res, "tape", 1, "mean of phi^lambda - lambda tau");
    Csv csv("sample_id,phi0,phi_lambda_minus_lambda,count_minus_k");
    for (std::size_t i = 0; i < rows.size(); ++i) csv.row(i, rows[i][0], rows[i][1], rows[i][2]);
    red.data["clt.csv"] = csv.str();
    return red;
  };
  return p;
}

double sineb_tmax(const ExperimentConfig& c) {
  const double lmax = *std::max_element(c.lambda_grid.begin(), c.lambda_grid.end());
  return c.Tmax > 0.0 ? c.Tmax : sine_beta_tmax(c.beta, std::max(lmax, 0.0));
}

TaskOutput sineb_task(const ExperimentConfig& c, SeedSpec s, int refine) {
  const double tmax = sineb_tmax(c);
  const auto steps = static_cast<std::size_t>(std::ceil(tmax / c.dt - 1e-9));
  NoiseTape t = NoiseTape::make(s, c.dt, steps, {Channel::B1, Channel::B2});
  for (int r = 0; r < refine; ++r) t = t.refined();
  const auto cnt = count_sine_beta(c.beta, c.lambda_grid, t, tmax);
  TaskOutput out(cnt.counts.begin(), cnt.counts.end());
  out.push_back(cnt.insufficient_tmax ? 1.0 : 0.0);
  return out;
}

std::string sineb_csv(const ExperimentConfig& c, const std::vector<TaskOutput>& rows) {
  Csv csv("sample_id,lambda,count");
  for (std::size_t s = 0; s < rows.size(); ++s) {
    for (std::size_t i = 0; i < c.lambda_grid.size(); ++i) csv.row(s, c.lambda_grid[i], rows[s][i]);
  }
  return csv.str();
}

Plan plan_sine_beta(const ExperimentConfig& c) {
  Plan p;
  add_arm(p, c, "tape", 10, c.paths,
          [c](SeedSpec s, int refine) { return sineb_task(c, s, refine); });
  p.reduce = [c](const ArmResults& res) {
    const auto& rows = res.at("tape");
    const std::size_t m = c.lambda_grid.size();
    std::vector<std::vector<long>> counts(m);
    for (std::size_t i = 0; i < m; ++i) counts[i] = long_column(rows, i);
    Reduction red;
    auto r = sine_beta_clt_report(c.beta, c.lambda_grid, counts);
    r.details["Tmax"] = sineb_tmax(c);
    r.details["insufficient_tmax_fraction"] = stats::mean(column(rows, m));
    red.reports.push_back(r);
    add_dt_check(red, res, "tape", 0, "mean count at the first lambda");
    red.data["sineb_counts.csv"] = sineb_csv(c, rows);
    return red;
  };
  return p;
}

Plan plan_time_change(const ExperimentConfig& c) {
  Plan p;
  add_arm(p, c, "tape", 11, c.paths,
          [c](SeedSpec s, int) -> TaskOutput {
            const double smax = -4.0 / c.beta * std::log(c.delta);
            const auto steps = static_cast<std::size_t>(std::floor(smax / c.dt + 1e-9));
            const auto t = NoiseTape::make(s, c.dt, steps, {Channel::B1, Channel::B2});
            const auto warped = integrate_decaying_warped(c.lambda_grid, c.beta,
                                                          std::sqrt(8.0 / c.beta), c.delta, t, 1);
            RelativeOptions o;
            o.beta = c.beta;
            o.record_every = 1;
            const auto sb = integrate_relative_family(RelativeKind::sine_beta, c.lambda_grid,
                                                      double(steps) * c.dt, t, o);
            double dev = 0.0;
            for (std::size_t k = 0; k < sb.values.size(); ++k) {
              for (std::size_t j = 0; j < c.lambda_grid.size(); ++j) {
                dev = std::max(dev, std::abs(sb.values[k][j] - warped.values[k][j]));
              }
            }
            return {dev};
          },
          false);
  p.reduce = [c](const ArmResults& res) {
    const auto dev = column(res.at("tape"), 0);
    Reduction red;
    StatReport r;
    r.name = "time-change";
    r.n = dev.size();
    r.estimate = *std::max_element(dev.begin(), dev.end());
    r.reference = 10.0 * std::sqrt(c.dt);
    r.verdict = r.estimate <= r.reference;
    r.details = {{"mean_deviation", stats::mean(dev)}, {"sigma_rho", std::sqrt(8.0 / c.beta)}};
    red.reports.push_back(r);
    Csv csv("sample_id,max_deviation");
    for (std::size_t i = 0; i < dev.size(); ++i) csv.row(i, dev[i]);
    red.data["time_change.csv"] = csv.str();
    return red;
  };
  return p;
}

double uniform_angle(SeedSpec s) { return kTwoPi * VariateStream(s, purpose::uniform_shift).uniform(0); }

Plan plan_carousel(const ExperimentConfig& c) {
  Plan p;
  const double L = c.windows.empty() ? 20.0 : c.windows.front().second;
  const double a2 = c.windows.size() > 1 ? c.windows[1].first : 3.7;
  add_arm(p, c, "carousel", 12, c.paths, [c, L](SeedSpec s, int refine) -> TaskOutput {
    const auto t = tape_for(s, c.tau, c.dt, {Channel::B2, Channel::B3}, refine);
    return {double(carousel_count(c.tau, L, uniform_angle(s), t))};
  });
  add_arm(p, c, "sch-star", 13, c.paths, [c, L, a2](SeedSpec s, int refine) -> TaskOutput {
    const auto t = tape_for(s, c.tau, c.dt, ChannelSet::critical(), refine);
    const double U = uniform_angle(s);
    const std::pair<double, double> iv[2] = {{-U, L - U}, {a2 - U, a2 + L - U}};
    const auto k = sch_counts(c.tau, iv, t);
    return {double(k[0]), double(k[1])};
  });
  p.reduce = [c, L, a2](const ArmResults& res) {
    const auto car = long_column(res.at("carousel"), 0);
    const auto sch = long_column(res.at("sch-star"), 0);
    const auto sch2 = long_column(res.at("sch-star"), 1);
    Reduction red;
    auto r = compare_distributions(car, sch, "carousel-vs-sch-star");
    r.details["L"] = L;
    red.reports.push_back(r);
    auto tr = compare_distributions(sch, sch2, "sch-star-translation");
    tr.details["windows"] = {{0.0, L}, {a2, a2 + L}};
    red.reports.push_back(tr);
    add_dt_check(red, res, "carousel", 0, "mean carousel count");
    add_dt_check(red, res, "sch-star", 0, "mean Sch* count");
    Csv csv("sample_id,arm,count");
    for (std::size_t i = 0; i < car.size(); ++i) csv.row(i, "carousel", car[i]);
    for (std::size_t i = 0; i < sch.size(); ++i) csv.row(i, "sch-star", sch[i]);
    red.data["carousel_counts.csv"] = csv.str();
    return red;
  };
  return p;
}

std::size_t discrete_size(const ExperimentConfig& c, std::size_t n) {
  return c.align_n ? aligned_size(SpectralWindow(c.E, 0.0), n, 2 * n - 1) : n;
}

Plan plan_discrete(const ExperimentConfig& c) {
  Plan p;
  const auto [a, b] = c.windows.empty() ? std::pair{0.0, kTwoPi} : c.windows.front();
  for (std::size_t i = 0; i < c.n_list.size(); ++i) {
    const std::size_t n = discrete_size(c, c.n_list[i]);
    add_arm(p, c, "discrete-" + std::to_string(n), 20 + i, c.paths,
            [c, n, a, b](SeedSpec s, int) -> TaskOutput {
              const auto H = build_hamiltonian(potential_spec(c, n), s);
              return {double(discrete_count(H, SpectralWindow(c.E, 0.0), a, b, c.shift))};
            },
            false);
  }
  const double tau = SpectralWindow(c.E, 0.0).tau_for(c.sigma);
  add_arm(p, c, "sch", 14, c.paths, [c, tau, a, b](SeedSpec s, int refine) -> TaskOutput {
    const auto t = tape_for(s, tau, c.dt, ChannelSet::critical(), refine);
    const std::pair<double, double> iv{a, b};
    return {double(sch_counts(tau, std::span(&iv, 1), t)[0])};
  });
  p.reduce = [c, tau](const ArmResults& res) {
    const auto sch = long_column(res.at("sch"), 0);
    Reduction red;
    StatReport r;
    r.name = "discrete-to-continuum";
    r.details = {{"tau", tau}, {"rows", json::array()}};
    bool monotone = true;
    double prev = 2.0, last = kNaN;
    Csv csv("source,sample_id,count");
    for (std::size_t i = 0; i < sch.size(); ++i) csv.row("sch", i, sch[i]);
    for (std::size_t n0 : c.n_list) {
      const std::size_t n = discrete_size(c, n0);
      const auto d = long_column(res.at("discrete-" + std::to_string(n)), 0);
      const double ks = stats::ks_distance_counts(d, sch);
      const auto chi = stats::chi2_two_sample_counts(d, sch);
      monotone = monotone && ks <= prev;
      prev = ks;
      last = ks;
      std::vector<double> dd(d.begin(), d.end());
      r.details["rows"].push_back({{"n", n},
                                   {"boundary_phase", boundary_phase(SpectralWindow(c.E, 0.0), n)},
                                   {"ks_distance", ks},
                                   {"chi2_p_value", chi.p_value},
                                   {"mean_discrete", stats::mean(dd)}});
      for (std::size_t i = 0; i < d.size(); ++i) csv.row("n=" + std::to_string(n), i, d[i]);
    }
    std::vector<double> sd(sch.begin(), sch.end());
    r.details["mean_sch"] = stats::mean(sd);
    r.details["non_increasing"] = monotone;
    r.n = sch.size();
    r.estimate = last;
    r.reference = 0.05;
    r.verdict = monotone && last < 0.05;
    red.reports.push_back(r);
    add_dt_check(red, res, "sch", 0, "mean Sch count");
    red.data["counts.csv"] = csv.str();
    return red;
  };
  return p;
}

Plan plan_invariance(const ExperimentConfig& c) {
  Plan p;
  auto arm = [c](double lam, double add) {
    return [c, lam, add](SeedSpec s, int refine) -> TaskOutput {
      const auto t = tape_for(s, c.t, c.dt, ChannelSet::critical(), refine);
      const double grid[1] = {lam};
      double out[1];
      phase_final(PhaseKind::critical, grid, c.t, t, out);
      return {out[0] + add};
    };
  };
  add_arm(p, c, "shifted", 15, c.paths, arm(c.lambda - c.theta, c.theta * c.t));
  add_arm(p, c, "direct", 16, c.paths, arm(c.lambda, 0.0));
  p.reduce = [](const ArmResults& res) {
    const auto x = column(res.at("shifted"), 0), y = column(res.at("direct"), 0);
    Reduction red;
    auto two = [](std::string name, double a, double sa, double b, double sb, std::size_t n) {
      StatReport r;
      r.name = std::move(name);
      r.n = n;
      r.estimate = a - b;
      r.stderr_ = std::hypot(sa, sb);
      r.reference = 0.0;
      r.statistic = r.estimate / r.stderr_;
      r.verdict = std::abs(r.estimate) <= 3.0 * r.stderr_;
      r.details = {{"shifted", a}, {"direct", b}};
      return r;
    };
    red.reports.push_back(two("invariance-mean", stats::mean(x), stats::stderr_mean(x),
                              stats::mean(y), stats::stderr_mean(y), x.size()));
    red.reports.push_back(two("invariance-variance", stats::variance(x), stats::stderr_variance(x),
                              stats::variance(y), stats::stderr_variance(y), x.size()));
    const auto ks = stats::ks_two_sample(x, y);
    StatReport k;
    k.name = "invariance-ks";
    k.n = x.size();
    k.estimate = ks.statistic;
    k.statistic = ks.statistic;
    k.p_value = ks.p_value;
    k.verdict = ks.p_value > 1e-2;
    red.reports.push_back(k);
    add_dt_check(red, res, "direct", 0, "mean of phi^lambda(t)");
    Csv csv("sample_id,arm,value");
    for (std::size_t i = 0; i < x.size(); ++i) csv.row(i, "shifted", x[i]);
    for (std::size_t i = 0; i < y.size(); ++i) csv.row(i, "direct", y[i]);
    red.data["invariance.csv"] = csv.str();
    return red;
  };
  return p;
}

// Zero-tape closed forms: each entry returns the error at step size dt.
struct ZeroCheck {
  const char* name;
  std::function<double(double dt)> error;
};

std::vector<ZeroCheck> zero_checks(const ExperimentConfig& c) {
  const double lam = 2.0, beta = c.beta;
  auto zero = [](double dt) { return NoiseTape::zero(dt, std::size_t(std::ceil(12.0 / dt)), ChannelSet::all()); };
  auto phase = [=](PhaseKind k, double h) {
    return [=](double dt) {
      const double g[1] = {lam};
      double o[1];
      phase_final(k, g, h, zero(dt), o);
      return std::abs(o[0] - lam * h);
    };
  };
  auto matrix = [=](MatrixKind k, double h) {
    return [=](double dt) {
      const auto X = integrate_matrix(k, lam, MatrixInit::identity, h, zero(dt)).X.back();
      const CMat2 ex{std::polar(1.0, lam * h / 2), 0.0, 0.0, std::polar(1.0, -lam * h / 2)};
      return max_abs_diff(X, ex);
    };
  };
  auto relative = [=](RelativeKind k, double h, double expect) {
    return [=](double dt) {
      const double g[1] = {lam};
      RelativeOptions o;
      o.beta = beta;
      return std::abs(integrate_relative_family(k, g, h, zero(dt), o).final_values()[0] - expect);
    };
  };
  return {
      {"phase-critical", phase(PhaseKind::critical, 1.0)},
      {"phase-decaying", phase(PhaseKind::decaying, 0.9)},
      {"phase-critical-e0",
       [=](double dt) {
         // phi' = l - sin(2 phi)/4 from 0: tan(phi) = (b + w tan(w t/2 + c))/a with
         // a = 2 l, b = 1/2, w = sqrt(a^2 - b^2), tan c = -b/w.
         const double l = 1.0, h = 2.0, a = 2.0 * l, b = 0.5, w = std::sqrt(a * a - b * b);
         const double th = w * h / 2 + std::atan(-b / w);
         const double m = std::floor((th + kPi / 2) / kPi);
         const double ex = std::atan((b + w * std::tan(th)) / a) + kPi * m;
         const double g[1] = {l};
         double o[1];
         phase_final(PhaseKind::critical_e0, g, h, zero(dt), o);
         return std::abs(o[0] - ex);
       }},
      {"matrix-generic", matrix(MatrixKind::generic, 1.0)},
      {"matrix-e0", matrix(MatrixKind::e0, 1.0)},
      {"matrix-decaying", matrix(MatrixKind::decaying, 0.9)},
      {"relative-critical", relative(RelativeKind::critical, 1.0, lam)},
      {"relative-decaying", relative(RelativeKind::decaying, 0.9, 0.9 * lam)},
      {"relative-sine-beta",
       relative(RelativeKind::sine_beta, 2.0, lam * (1.0 - std::exp(-beta * 2.0 / 4.0)))},
      {"relative-decaying-warped",
       [=](double dt) {
         const double g[1] = {lam}, delta = 1e-2;
         const auto p = integrate_decaying_warped(g, beta, 1.0, delta, zero(dt));
         return std::abs(p.final_values()[0] - lam * (1.0 - std::exp(-beta * p.times.back() / 4)));
       }},
      {"derivative",
       [=](double dt) {
         const auto d = integrate_derivative(lam, 1.0, zero(dt), true);
         return std::abs(d.varpi.back() - 1.0) + std::abs(d.phi.back() - lam) +
                std::abs(d.phi2.back());
       }},
      {"derivative-functional",
       [=](double dt) {
         return std::abs(sample_derivative_functional(1.0, zero(dt)) -
                         4.0 * (1.0 - std::exp(-0.25)));
       }},
      {"logtan",
       [=](double dt) {
         const auto y = integrate_logtan(0.0, 1.0, zero(dt), 1.0);
         return std::abs(y.Y.back() - std::asinh(std::sinh(1.0) * std::exp(0.25)));
       }},
      {"carousel",
       [=](double dt) {
         const double g[1] = {lam};
         const auto p = integrate_carousel(g, 1.0, zero(dt));
         return std::abs(p.gamma.back()[0] - lam) + std::abs(p.V.back());
       }},
  };
}

Plan plan_conservation(const ExperimentConfig& c) {
  Plan p;
  add_arm(p, c, "tape", 17, c.paths,
          [c](SeedSpec s, int) -> TaskOutput {
            const auto fine = tape_for(s, c.t, c.dt / 2.0, ChannelSet::critical(), 0);
            const auto coarse = fine.coarsened();
            MatrixOptions o;
            o.E = c.E;
            TaskOutput out;
            for (const NoiseTape* t : {&coarse, &fine}) {
              const auto X = integrate_matrix(MatrixKind::generic, c.lambda, MatrixInit::identity,
                                              c.t, *t, o);
              out.push_back(std::abs(X.X.back().det() - 1.0));
            }
            for (const NoiseTape* t : {&coarse, &fine}) {
              const auto X =
                  integrate_matrix(MatrixKind::generic, c.lambda, MatrixInit::zinv, c.t, *t, o);
              auto inv = [](const CMat2& m) { return std::imag(m.a * std::conj(m.b)); };
              out.push_back(std::abs(inv(X.X.back()) - inv(X.X.front())));
            }
            return out;
          },
          false);
  add_arm(p, c, "zero-tape", 18, 1,
          [c](SeedSpec, int) -> TaskOutput {
            TaskOutput out;
            for (const auto& z : zero_checks(c)) {
              out.push_back(z.error(c.dt));
              out.push_back(z.error(c.dt / 2.0));
            }
            return out;
          },
          false);
  p.reduce = [c](const ArmResults& res) {
    const auto& rows = res.at("tape");
    auto median = [](std::vector<double> x) {
      std::nth_element(x.begin(), x.begin() + x.size() / 2, x.end());
      return x[x.size() / 2];
    };
    Reduction red;
    auto order = [&](std::string name, std::size_t j) {
      const double a = median(column(rows, j)), b = median(column(rows, j + 1));
      StatReport r;
      r.name = std::move(name);
      r.n = rows.size();
      r.estimate = a / b;
      r.reference = 1.3;
      r.verdict = r.estimate >= 1.3;
      r.details = {{"median_dt", a}, {"median_half_dt", b}, {"dt", c.dt}};
      return r;
    };
    red.reports.push_back(order("det-drift-order", 0));
    red.reports.push_back(order("zinv-invariant-order", 2));
    const auto& z = res.at("zero-tape").at(0);
    const auto checks = zero_checks(c);
    StatReport r;
    r.name = "zero-tape-checks";
    r.n = checks.size();
    r.details = {{"dt", c.dt}, {"rows", json::array()}};
    bool ok = true;
    double worst = 0.0;
    Csv csv("integrator,error_dt,error_half_dt");
    for (std::size_t i = 0; i < checks.size(); ++i) {
      const double e1 = z[2 * i], e2 = z[2 * i + 1];
      // O(dt): within 10 dt, and halving dt does not make it worse.
      const bool pass = e1 <= 10.0 * c.dt && e2 <= 0.75 * e1 + 1e-12;
      ok = ok && pass;
      worst = std::max(worst, e1 / c.dt);
      r.details["rows"].push_back(
          {{"integrator", checks[i].name}, {"error_dt", e1}, {"error_half_dt", e2}, {"pass", pass}});
      csv.row(std::string(checks[i].name), e1, e2);
    }
    r.estimate = worst;
    r.reference = 10.0;
    r.verdict = ok;
    red.reports.push_back(r);
    red.data["zero_tape.csv"] = csv.str();
    Csv d("sample_id,det_dt,det_half_dt,invariant_dt,invariant_half_dt");
    for (std::size_t i = 0; i < rows.size(); ++i) d.row(i, rows[i][0], rows[i][1], rows[i][2], rows[i][3]);
    red.data["conservation.csv"] = d.str();
    return red;
  };
  return p;
}

Plan plan_gap(const ExperimentConfig& c) {
  Plan p;
  add_arm(p, c, "tape", 19, c.paths, [c](SeedSpec s, int refine) -> TaskOutput {
    const auto t = tape_for(s, c.tau, c.dt, ChannelSet::critical(), refine);
    std::vector<double> lam{0.0};
    lam.insert(lam.end(), c.lambda_grid.begin(), c.lambda_grid.end());
    const auto phi = sch_phases(c.tau, lam, t);
    TaskOutput out;
    for (std::size_t i = 1; i < phi.size(); ++i) {
      out.push_back(phi[i] < phi[0] || lattice_count(phi[0], phi[i]) == 0 ? 1.0 : 0.0);
    }
    return out;
  });
  p.reduce = [c](const ArmResults& res) {
    const auto& rows = res.at("tape");
    std::vector<std::vector<char>> empty(c.lambda_grid.size());
    for (std::size_t i = 0; i < empty.size(); ++i) {
      empty[i].reserve(rows.size());
      for (const auto& r : rows) empty[i].push_back(r[i] != 0.0);
    }
    Reduction red;
    const auto r = gap_report(c.tau, c.lambda_grid, empty);
    red.reports.push_back(r);
    add_dt_check(red, res, "tape", 0, "P(gap) at the first lambda");
    Csv csv("lambda,p_hat,stderr,hits,n");
    for (const auto& row : r.details["rows"]) {
      csv.row(row["lambda"].get<double>(), row["p_hat"].get<double>(),
              row["stderr"].get<double>(), row["hits"].get<std::size_t>(),
              row["n"].get<std::size_t>());
    }
    red.data["gap.csv"] = csv.str();
    return red;
  };
  return p;
}

Plan plan_bounds(const ExperimentConfig& c) {
  Plan p;
  add_arm(p, c, "instance", 21, c.paths,
          [c](SeedSpec s, int) -> TaskOutput {
            const auto H = build_hamiltonian(potential_spec(c, c.n), s);
            const SpectralWindow w(c.E, c.R);
            TaskOutput out;
            for (const auto& [a, b] : c.windows) {
              out.push_back(double(sturm_count(H, w.to_energy(b, c.n))) -
                            double(sturm_count(H, w.to_energy(a, c.n))));
            }
            const auto eigs = eigenvalues_in_window(H, w, 1e-13);
            for (double t : c.deloc_t) {
              bool violated = false;
              for (double mu : eigs) {
                violated = violated || !eigenvector_delocalization(H, mu, w, t).holds;
              }
              out.push_back(violated ? 1.0 : 0.0);
            }
            out.push_back(double(eigs.size()));
            return out;
          },
          false);
  p.reduce = [c](const ArmResults& res) {
    const auto& rows = res.at("instance");
    const std::size_t m = c.windows.size();
    std::vector<std::vector<long>> counts(m);
    for (std::size_t i = 0; i < m; ++i) counts[i] = long_column(rows, i);
    Reduction red;
    red.reports.push_back(wegner_minami_report(potential_spec(c, c.n), c.windows, counts));
    StatReport d;
    d.name = "delocalization";
    d.n = rows.size();
    d.details = {{"rows", json::array()}, {"R", c.R}};
    bool decreasing = true;
    double prev = 2.0;
    for (std::size_t i = 0; i < c.deloc_t.size(); ++i) {
      const auto v = column(rows, m + i);
      const double rate = stats::mean(v);
      decreasing = decreasing && rate < prev;
      prev = rate;
      d.details["rows"].push_back(
          {{"t", c.deloc_t[i]}, {"violation_rate", rate}, {"stderr", stats::stderr_mean(v)}});
      d.estimate = rate;
    }
    d.details["mean_eigenvalues_in_window"] = stats::mean(column(rows, m + c.deloc_t.size()));
    d.verdict = decreasing;
    red.reports.push_back(d);
    Csv csv("instance,window_counts,violations");
    for (std::size_t s = 0; s < rows.size(); ++s) {
      std::string wc, vc;
      for (std::size_t i = 0; i < m; ++i) wc += (i ? ";" : "") + fmt(rows[s][i]);
      for (std::size_t i = 0; i < c.deloc_t.size(); ++i) vc += (i ? ";" : "") + fmt(rows[s][m + i]);
      csv.row(s, wc, vc);
    }
    red.data["bounds.csv"] = csv.str();
    return red;
  };
  return p;
}

// Data-only experiments.

Plan plan_phase_surface(const ExperimentConfig& c) {
  Plan p;
  add_arm(p, c, "surface", 30, 1,
          [c](SeedSpec s, int refine) -> TaskOutput {
            const auto t = tape_for(s, c.tau, c.dt, ChannelSet::critical(), refine);
            PhaseOptions o;
            o.record_every = 1;
            const auto f = integrate_phase_family(PhaseKind::critical, c.lambda_grid, c.tau, t, o);
            const std::size_t K = f.times.size() - 1;
            TaskOutput out;
            for (std::size_t i = 0; i < 100; ++i) {
              const std::size_t k = (i * K + 49) / 99;
              out.push_back(f.times[k]);
              out.insert(out.end(), f.values[k].begin(), f.values[k].end());
            }
            return out;
          },
          false);
  p.reduce = [c](const ArmResults& res) {
    const auto& o = res.at("surface").at(0);
    const std::size_t m = c.lambda_grid.size();
    Csv csv("t,lambda,phi");
    for (std::size_t i = 0; i < 100; ++i) {
      const double* row = &o[i * (m + 1)];
      for (std::size_t j = 0; j < m; ++j) csv.row(row[0], c.lambda_grid[j], row[1 + j]);
    }
    Reduction red;
    red.data["phase_surface.csv"] = csv.str();
    return red;
  };
  return p;
}

Plan plan_q_trace(const ExperimentConfig& c) {
  Plan p;
  add_arm(p, c, "trace", 31, 1,
          [c](SeedSpec s, int) -> TaskOutput {
            const auto v = potential_values(potential_spec(c, c.n), s);
            const auto chain = evolve_chain(SpectralWindow(c.E, 0.0), v, c.lambda);
            TaskOutput out;
            for (const auto& st : chain) {
              out.insert(out.end(), {std::real(st.Q.a), std::imag(st.Q.a), std::real(st.Q.b),
                                     std::imag(st.Q.b)});
            }
            return out;
          },
          false);
  p.reduce = [](const ArmResults& res) {
    const auto& o = res.at("trace").at(0);
    Csv csv("ell,re_q11,im_q11,re_q12,im_q12");
    for (std::size_t l = 0; 4 * l + 3 < o.size(); ++l) {
      csv.row(l, o[4 * l], o[4 * l + 1], o[4 * l + 2], o[4 * l + 3]);
    }
    Reduction red;
    red.data["q_trace.csv"] = csv.str();
    return red;
  };
  return p;
}

Plan plan_sch_points(const ExperimentConfig& c) {
  Plan p;
  add_arm(p, c, "sample", 32, c.paths,
          [c](SeedSpec s, int refine) { return sch_point_task(c, s, refine); }, false);
  p.reduce = [](const ArmResults& res) {
    const auto& rows = res.at("sample");
    Csv csv("sample_id,point");
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t j = 2; j < rows[i].size(); ++j) csv.row(i, rows[i][j]);
    }
    Reduction red;
    red.data["points.csv"] = csv.str();
    return red;
  };
  return p;
}

Plan plan_sineb_counts(const ExperimentConfig& c) {
  Plan p;
  add_arm(p, c, "tape", 33, c.paths,
          [c](SeedSpec s, int refine) { return sineb_task(c, s, refine); }, false);
  p.reduce = [c](const ArmResults& res) {
    Reduction red;
    red.data["sineb_counts.csv"] = sineb_csv(c, res.at("tape"));
    return red;
  };
  return p;
}

struct ExperimentEntry {
  const char* name;
  bool data_only;
  Plan (*plan)(const ExperimentConfig&);
};

const std::vector<ExperimentEntry>& registry() {
  static const std::vector<ExperimentEntry> r = {
      {"zero-noise-spectrum", false, plan_zero_noise},
      {"oracle-agreement", false, plan_oracle},
      {"phase-marginal", false, plan_phase_marginal},
      {"derivative-identities", false, plan_derivative},
      {"intensity", false, plan_intensity},
      {"repulsion", false, plan_repulsion},
      {"clt", false, plan_clt},
      {"sine-beta", false, plan_sine_beta},
      {"time-change", false, plan_time_change},
      {"carousel", false, plan_carousel},
      {"discrete-to-continuum", false, plan_discrete},
      {"invariance", false, plan_invariance},
      {"conservation", false, plan_conservation},
      {"gap", false, plan_gap},
      {"bounds", false, plan_bounds},
      {"phase-surface", true, plan_phase_surface},
      {"q-trace", true, plan_q_trace},
      {"sch-points", true, plan_sch_points},
      {"sineb-counts", true, plan_sineb_counts},
  };
  return r;
}

const ExperimentEntry& entry(std::string_view name) {
  for (const auto& e : registry()) {
    if (name == e.name) return e;
  }
  throw ConfigError("experiment", "unknown experiment '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Execution.

struct TaskError : std::runtime_error {
  TaskFailure failure;
  explicit TaskError(TaskFailure f) : std::runtime_error(f.message), failure(std::move(f)) {}
};

json seed_json(SeedSpec s) { return {{"master_seed", s.master_seed}, {"stream_id", s.stream_id}}; }

void write_file(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << text;
}

}  // namespace

// ---------------------------------------------------------------------------
// ExperimentConfig.

ExperimentConfig ExperimentConfig::defaults(std::string_view experiment) {
  entry(experiment);  // validates the name
  ExperimentConfig c;
  c.experiment = std::string(experiment);
  const std::string e(experiment);
  if (e == "zero-noise-spectrum") {
    c.sigma = 0.0;
    c.n = 2000;
    c.paths = 1;
  } else if (e == "oracle-agreement") {
    c.paths = 100;
  } else if (e == "phase-marginal") {
    c.lambda = 3.0;
    c.paths = 50000;
  } else if (e == "derivative-identities") {
    c.lambda = 1.0;
    c.paths = 10000;
  } else if (e == "intensity") {
    c.paths = 20000;
    c.windows = {{0.0, 2.0 * kTwoPi}};
  } else if (e == "repulsion") {
    c.eps = {0.05, 0.1, 0.2};
    c.paths = 100000;
  } else if (e == "clt") {
    c.lambda = 200.0;
    c.theta = 1.0;
    c.paths = 50000;
  } else if (e == "sine-beta") {
    c.lambda_grid = {kTwoPi, kTwoPi * 200.0};
    c.paths = 20000;
  } else if (e == "time-change") {
    c.lambda_grid = {0.0, kTwoPi, 10.0 * kTwoPi};
    c.paths = 100;
  } else if (e == "carousel") {
    c.windows = {{0.0, 20.0}};
    c.paths = 20000;
  } else if (e == "discrete-to-continuum") {
    c.n_list = {500, 2000, 8000};
    c.windows = {{0.0, kTwoPi}};
    c.paths = 5000;
  } else if (e == "invariance") {
    c.lambda = 5.0;
    c.theta = 2.0;
    c.paths = 10000;
  } else if (e == "conservation") {
    c.lambda = 2.0;
    c.dt = 1e-3;
    c.paths = 1000;
  } else if (e == "gap") {
    c.lambda_grid = {4.0, 6.0};
    c.paths = 1000000;
  } else if (e == "bounds") {
    c.windows = {{0.0, 0.05}, {0.0, 0.2}, {0.0, 1.0}};
    c.deloc_t = {3.0, 10.0};
    c.paths = 1000;
  } else if (e == "phase-surface") {
    c.lambda_grid = linspace(0.0, 20.0, 81);
    c.paths = 1;
  } else if (e == "q-trace") {
    c.n = 10000;
    c.lambda = 25.0;
    c.paths = 1;
  } else if (e == "sch-points") {
    c.windows = {{0.0, 2.0 * kTwoPi}};
    c.paths = 100;
  } else if (e == "sineb-counts") {
    c.lambda_grid = {kTwoPi, 10.0 * kTwoPi};
    c.paths = 100;
  }
  return c;
}

ExperimentConfig ExperimentConfig::parse(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> kv;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(trim(line), "line " + std::to_string(lineno) + " has no '='");
    }
    kv.emplace_back(trim(std::string_view(line).substr(0, eq)),
                    trim(std::string_view(line).substr(eq + 1)));
  }
  std::string name = "zero-noise-spectrum";
  for (const auto& [k, v] : kv) {
    if (k == "experiment") name = v;
  }
  ExperimentConfig c = defaults(name);
  for (const auto& [k, v] : kv) c.set(k, v);
  return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& file) {
  std::ifstream f(file);
  if (!f) throw std::invalid_argument("missing config file: " + file.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

void ExperimentConfig::set(std::string_view key, std::string_view value) {
  find_key(key).set(*this, value);
}

std::string ExperimentConfig::get(std::string_view key) const { return find_key(key).get(*this); }

const std::vector<std::string>& ExperimentConfig::keys() {
  static const std::vector<std::string> k = [] {
    std::vector<std::string> out;
    for (const auto& s : key_table()) out.emplace_back(s.name);
    return out;
  }();
  return k;
}

void ExperimentConfig::validate() const {
  entry(experiment);
  auto need = [](bool ok, const char* key, const std::string& what) {
    if (!ok) throw ConfigError(key, what);
  };
  need(std::abs(E) < 2.0, "E", "energy must satisfy |E| < 2");
  need(sigma >= 0.0, "sigma", "must be non-negative");
  need(n >= 2, "n", "must be at least 2");
  need(R > 0.0, "R", "must be positive");
  need(dt > 0.0, "dt", "must be positive");
  need(tau > 0.0, "tau", "must be positive");
  need(beta > 0.0, "beta", "must be positive");
  need(Tmax >= 0.0, "Tmax", "must be non-negative");
  need(delta > 0.0 && delta < 1.0, "delta", "must lie in (0, 1)");
  need(t > 0.0, "t", "must be positive");
  need(paths >= 1, "paths", "must be at least 1");
  for (double e : eps) need(e > 0.0, "eps", "values must be positive");
  need(std::is_sorted(eps.begin(), eps.end()), "eps", "must be ascending");
  for (const auto& [a, b] : windows) need(a < b, "windows", "each window needs a < b");
  for (double x : deloc_t) need(x > 0.0, "deloc_t", "values must be positive");
  need(std::is_sorted(lambda_grid.begin(), lambda_grid.end()), "lambda_grid", "must be ascending");
  for (std::size_t x : n_list) need(x >= 2, "n_list", "sizes must be at least 2");
  const std::string& e = experiment;
  if (e == "sine-beta" || e == "sineb-counts" || e == "time-change" || e == "gap" ||
      e == "phase-surface") {
    need(!lambda_grid.empty(), "lambda_grid", "must not be empty");
  }
  if (e == "gap") need(lambda_grid.front() > 0.0, "lambda_grid", "gap lengths must be positive");
  if (e == "repulsion") need(!eps.empty(), "eps", "must not be empty");
  if (e == "discrete-to-continuum") {
    need(!n_list.empty(), "n_list", "must not be empty");
    need(sigma > 0.0, "sigma", "must be positive");
  }
  if (e == "bounds") {
    need(!windows.empty(), "windows", "must not be empty");
    need(!deloc_t.empty(), "deloc_t", "must not be empty");
    need(sigma > 0.0, "sigma", "must be positive");
    need(omega != OmegaKind::rademacher, "omega", "Wegner bounds need a bounded density");
  }
  if (e == "intensity" || e == "sch-points") {
    need(!windows.empty(), "windows", "must not be empty");
  }
  if (e == "clt") need(lambda > 0.0, "lambda", "must be positive");
  if (e == "conservation") need(paths >= 2, "paths", "needs at least 2 paths");
}

std::string ExperimentConfig::canonical() const {
  std::vector<std::string> lines;
  for (const auto& k : key_table()) {
    if (k.hashed) lines.push_back(std::string(k.name) + "=" + k.get(*this));
  }
  std::sort(lines.begin(), lines.end());
  std::string s;
  for (const auto& l : lines) s += l + "\n";
  return s;
}

std::string ExperimentConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string ExperimentConfig::to_text() const {
  std::string s;
  for (const auto& k : key_table()) s += std::string(k.name) + " = " + k.get(*this) + "\n";
  return s;
}

unsigned ExperimentConfig::effective_workers() const {
  return workers == 0 ? default_workers() : workers;
}

std::vector<std::string> experiment_names() {
  std::vector<std::string> out;
  for (const auto& e : registry()) out.emplace_back(e.name);
  return out;
}

bool is_data_experiment(std::string_view name) { return entry(name).data_only; }

// ---------------------------------------------------------------------------
// Task ids and manifests.

std::string TaskId::str() const { return arm + ":" + std::to_string(index); }

TaskId TaskId::parse(std::string_view text) {
  const auto p = text.rfind(':');
  if (p == std::string_view::npos) throw std::invalid_argument("task id must be arm:index");
  TaskId id;
  id.arm = std::string(text.substr(0, p));
  const auto rest = text.substr(p + 1);
  auto r = std::from_chars(rest.data(), rest.data() + rest.size(), id.index);
  if (rest.empty() || r.ec != std::errc() || r.ptr != rest.data() + rest.size()) {
    throw std::invalid_argument("task id must be arm:index");
  }
  return id;
}

json RunManifest::to_json() const {
  json j;
  j["experiment"] = experiment;
  j["config_hash"] = config_hash;
  j["code_version"] = code_version;
  j["wall_clock_seconds"] = wall_clock_seconds;
  j["config"] = config;
  j["reports"] = json::array();
  for (const auto& r : reports) {
    j["reports"].push_back({{"name", r.name}, {"file", r.file}, {"verdict", r.verdict ? "pass" : "fail"}});
  }
  j["data_files"] = data_files;
  j["verdict"] = verdict ? "pass" : "fail";
  if (failure) {
    j["failure"] = {{"task", failure->task.str()},
                    {"seed", seed_json(failure->seed)},
                    {"message", failure->message}};
  }
  return j;
}

RunManifest RunManifest::from_json(const json& j) {
  RunManifest m;
  m.experiment = j.at("experiment").get<std::string>();
  m.config_hash = j.at("config_hash").get<std::string>();
  m.code_version = j.at("code_version").get<std::string>();
  m.wall_clock_seconds = j.at("wall_clock_seconds").get<double>();
  m.config = j.at("config").get<std::map<std::string, std::string>>();
  for (const auto& r : j.at("reports")) {
    m.reports.push_back({r.at("name").get<std::string>(), r.at("file").get<std::string>(),
                         r.at("verdict").get<std::string>() == "pass"});
  }
  m.data_files = j.value("data_files", std::vector<std::string>{});
  m.verdict = j.at("verdict").get<std::string>() == "pass";
  if (j.contains("failure")) {
    const auto& f = j["failure"];
    m.failure = TaskFailure{TaskId::parse(f.at("task").get<std::string>()),
                            SeedSpec{f["seed"]["master_seed"].get<std::uint64_t>(),
                                     f["seed"]["stream_id"].get<std::uint64_t>()},
                            f.at("message").get<std::string>()};
  }
  return m;
}

RunManifest RunManifest::load(const fs::path& run_dir) {
  const auto p = run_dir / "manifest.json";
  std::ifstream f(p);
  if (!f) throw std::invalid_argument("missing manifest: " + p.string());
  return from_json(json::parse(f));
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const Plan plan = entry(config.experiment).plan(config);
  ExperimentResult out;
  RunManifest& m = out.manifest;
  m.experiment = config.experiment;
  m.config_hash = config.hash();
  for (const auto& k : key_table()) m.config[k.name] = k.get(config);

  ArmResults results;
  try {
    for (const Arm& arm : plan.arms) {
      auto& rows = results[arm.name];
      rows.assign(arm.count, {});
      parallel_for(arm.count, config.effective_workers(), [&](std::size_t i) {
        const SeedSpec seed = task_seed(config, arm, i);
        try {
          rows[i] = arm.fn(seed, arm.refine);
        } catch (const std::exception& e) {
          throw TaskError({TaskId{arm.name, i}, seed, e.what()});
        }
      });
    }
    Reduction red = plan.reduce(results);
    out.reports = std::move(red.reports);
    out.data = std::move(red.data);
    m.verdict = std::all_of(out.reports.begin(), out.reports.end(),
                            [](const StatReport& r) { return r.verdict; });
  } catch (const TaskError& e) {
    m.failure = e.failure;
    m.verdict = false;
  } catch (const std::exception& e) {
    m.failure = TaskFailure{TaskId{"reduce", 0}, SeedSpec{config.master_seed, 0}, e.what()};
    m.verdict = false;
  }
  for (const auto& r : out.reports) m.reports.push_back({r.name, "reports/" + r.name + ".json", r.verdict});
  for (const auto& [name, _] : out.data) m.data_files.push_back("data/" + name);
  m.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  if (!config.output_dir.empty()) {
    const fs::path dir(config.output_dir);
    for (const auto& r : out.reports) write_file(dir / "reports" / (r.name + ".json"), r.to_json().dump(2) + "\n");
    for (const auto& [name, text] : out.data) write_file(dir / "data" / name, text);
    write_file(dir / "config.txt", config.to_text());
    write_file(dir / "manifest.json", m.to_json().dump(2) + "\n");
  }
  return out;
}

ReplayResult replay(const RunManifest& manifest, const ExperimentConfig& config,
                    const TaskId& task) {
  config.validate();
  const Plan plan = entry(config.experiment).plan(config);
  for (const Arm& arm : plan.arms) {
    if (arm.name != task.arm) continue;
    if (task.index >= arm.count) {
      throw std::invalid_argument("unknown task id " + task.str() + ": arm has " +
                                  std::to_string(arm.count) + " tasks");
    }
    ReplayResult r;
    r.task = task;
    r.seed = task_seed(config, arm, task.index);
    r.config_matches = config.hash() == manifest.config_hash;
    r.output = arm.fn(r.seed, arm.refine);
    return r;
  }
  throw std::invalid_argument("unknown task id " + task.str());
}

std::vector<fs::path> emit_plot_data(const std::vector<fs::path>& inputs,
                                     const fs::path& out_dir) {
  for (const auto& p : inputs) {
    if (!fs::exists(p)) throw std::invalid_argument("missing input: " + p.string());
  }
  fs::create_directories(out_dir);
  std::vector<fs::path> written;
  auto emit = [&](const fs::path& name, const std::string& text) {
    write_file(out_dir / name, text);
    written.push_back(out_dir / name);
  };
  for (const auto& p : inputs) {
    const std::string stem = p.stem().string();
    if (p.extension() == ".csv") {
      // CSV to whitespace columns with a commented header.
      std::ifstream f(p);
      std::string line, text;
      bool header = true;
      while (std::getline(f, line)) {
        std::replace(line.begin(), line.end(), ',', ' ');
        text += (header ? "# " : "") + line + "\n";
        header = false;
      }
      emit(stem + ".dat", text);
      continue;
    }
    std::ifstream f(p);
    const json r = json::parse(f);
    const json& d = r.value("details", json::object());
    if (d.contains("bins")) {
      std::string hist = "# center observed_density\n", theta = "# x theta_density\n";
      for (const auto& b : d["bins"]) {
        hist += fmt(b["center"].get<double>()) + " " + fmt(b["observed_density"].get<double>()) + "\n";
      }
      const double tau = d.value("tau", 1.0);
      for (double x : linspace(0.0, kTwoPi, 201)) theta += fmt(x) + " " + fmt(theta_density(x, tau)) + "\n";
      emit(stem + "_hist.dat", hist);
      emit(stem + "_theta.dat", theta);
    }
    if (d.contains("rows") && d["rows"].is_array() && !d["rows"].empty()) {
      // Numeric scalar fields of the first row become the columns.
      std::vector<std::string> cols;
      for (const auto& [k, v] : d["rows"][0].items()) {
        if (v.is_number()) cols.push_back(k);
      }
      if (cols.empty()) continue;
      std::string text = "#";
      for (const auto& k : cols) text += " " + k;
      text += "\n";
      for (const auto& row : d["rows"]) {
        for (std::size_t i = 0; i < cols.size(); ++i) {
          const auto it = row.find(cols[i]);
          const bool num = it != row.end() && it->is_number();
          text += (i ? " " : "") + (num ? fmt(it->get<double>()) : std::string("nan"));
        }
        text += "\n";
      }
      emit(stem + "_rows.dat", text);
    }
  }
  return written;
}

}  // namespace schrolab
