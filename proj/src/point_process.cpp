#include "schrolab/point_process.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "schrolab/stats.hpp"

namespace schrolab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool non_decreasing(std::span<const double> v, double tol) {
  for (std::size_t j = 1; j < v.size(); ++j) {
    if (v[j] < v[j - 1] - tol) return false;
  }
  return true;
}

// Sample proportion with its binomial standard error.
struct Proportion {
  double p = 0.0, se = 0.0;
  std::size_t hits = 0, n = 0;
};

Proportion proportion(std::size_t hits, std::size_t n) {
  if (n == 0) throw std::invalid_argument("proportion of an empty sample");
  Proportion r;
  r.hits = hits;
  r.n = n;
  r.p = double(hits) / double(n);
  r.se = std::sqrt(r.p * (1.0 - r.p) / double(n));
  return r;
}

double shift_for(const SpectralWindow& w, std::size_t n, ShiftConvention conv) {
  return boundary_phase(w, n) + (conv == ShiftConvention::lattice_plus_pi ? std::numbers::pi : 0.0);
}

}  // namespace

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::discrete_operator: return "discrete-operator";
    case Provenance::phase_sde: return "phase-sde";
    case Provenance::carousel: return "carousel";
    case Provenance::sine_beta_sde: return "sine-beta-sde";
  }
  return "?";
}

std::vector<double> sch_phases(double tau, std::span<const double> lambdas, const TapeView& tape) {
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
  std::vector<double> grid(lambdas.size()), out(lambdas.size());
  for (std::size_t j = 0; j < grid.size(); ++j) grid[j] = lambdas[j] / tau;
  phase_final(PhaseKind::critical, grid, tau, tape, out);
  return out;
}

long lattice_count(double a, double b) {
  if (b < a) throw std::invalid_argument("lattice_count needs a <= b");
  return static_cast<long>(std::ceil(b / kTwoPi) - std::ceil(a / kTwoPi));
}

PointSample sample_sch_points(double tau, double lo, double hi, const NoiseTape& tape,
                              double tol_lambda, double grid_step) {
  if (!(tol_lambda > 0.0)) throw std::invalid_argument("tol_lambda must be positive");
  if (!(hi > lo)) throw std::invalid_argument("window must have hi > lo");
  if (!(grid_step > 0.0)) throw std::invalid_argument("grid_step must be positive");
  const auto m = static_cast<std::size_t>(std::ceil((hi - lo) / grid_step));
  std::vector<double> grid(m + 1);
  for (std::size_t j = 0; j <= m; ++j) grid[j] = lo + (hi - lo) * double(j) / double(m);

  NoiseTape cur = tape;
  std::vector<double> phi;
  int refinements = 0;
  for (;; ++refinements) {
    phi = sch_phases(tau, grid, cur);
    if (non_decreasing(phi, 1e-9)) break;
    if (refinements >= 3) throw NumericalError("Sch phases not monotone after dt refinement");
    cur = cur.refined();
  }

  struct Target {
    double level, a, b;
  };
  std::vector<Target> targets;
  for (std::size_t j = 0; j < m; ++j) {
    const long k0 = static_cast<long>(std::ceil(phi[j] / kTwoPi));
    const long k1 = static_cast<long>(std::ceil(phi[j + 1] / kTwoPi));
    for (long k = k0; k < k1; ++k) targets.push_back({kTwoPi * double(k), grid[j], grid[j + 1]});
  }
  // Bisect every bracket at once, one joint integration per round.
  std::vector<double> mids(targets.size());
  while (!targets.empty()) {
    double width = 0.0;
    for (const auto& t : targets) width = std::max(width, t.b - t.a);
    if (width <= tol_lambda) break;
    for (std::size_t i = 0; i < targets.size(); ++i) mids[i] = 0.5 * (targets[i].a + targets[i].b);
    const auto pm = sch_phases(tau, mids, cur);
    for (std::size_t i = 0; i < targets.size(); ++i) {
      (pm[i] < targets[i].level ? targets[i].a : targets[i].b) = mids[i];
    }
  }
  PointSample s;
  s.lo = lo;
  s.hi = hi;
  s.provenance = Provenance::phase_sde;
  s.parameter = tau;
  s.refinements = refinements;
  for (const auto& t : targets) {
    const double x = std::clamp(0.5 * (t.a + t.b), lo, hi);
    if (s.points.empty() || x > s.points.back()) {
      s.points.push_back(x);
    } else {
      // Two crossings closer than tol_lambda: keep them distinct and ordered.
      s.points.push_back(std::nextafter(s.points.back(), hi + 1.0));
    }
  }
  return s;
}

std::vector<long> sch_counts(double tau, std::span<const std::pair<double, double>> intervals,
                             const TapeView& tape) {
  std::vector<double> ends;
  for (const auto& [a, b] : intervals) {
    if (b < a) throw std::invalid_argument("interval with b < a");
    ends.push_back(a);
    ends.push_back(b);
  }
  const auto phi = sch_phases(tau, ends, tape);
  std::vector<long> out;
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    const double pa = phi[2 * i], pb = phi[2 * i + 1];
    out.push_back(pb >= pa ? lattice_count(pa, pb) : 0);
  }
  return out;
}

SineBetaCounts count_sine_beta(double beta, std::span<const double> grid, const TapeView& tape,
                               double tmax) {
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
  const double steps = std::ceil(tmax / tape.dt() - 1e-9);
  RelativeOptions o;
  o.beta = beta;
  const auto p =
      integrate_relative_family(RelativeKind::sine_beta, grid, steps * tape.dt(), tape, o);
  SineBetaCounts c;
  for (double a : p.final_values()) {
    const double x = a / kTwoPi;
    const long k = std::lround(x);
    c.counts.push_back(k);
    c.max_residual = std::max(c.max_residual, std::abs(x - double(k)));
  }
  c.insufficient_tmax = c.max_residual > 0.2;
  return c;
}

long carousel_count(double tau, double L, double U, const TapeView& tape) {
  const std::vector<double> grid{L / tau};
  const auto c = integrate_carousel(grid, tau, tape);
  const double A = carousel_angle(c.V.back(), c.gamma.back()[0]);
  return static_cast<long>(std::floor((A - U) / kTwoPi)) + 1;
}

long sch_star_count(double tau, double L, double U, const TapeView& tape) {
  const std::pair<double, double> iv{-U, L - U};
  return sch_counts(tau, std::span(&iv, 1), tape)[0];
}

long discrete_count(const Hamiltonian& H, const SpectralWindow& w, double a, double b,
                    ShiftConvention conv) {
  const std::size_t n = H.size();
  const double s = shift_for(w, n, conv);
  const double ea = w.to_energy(a + s, n), eb = w.to_energy(b + s, n);
  return static_cast<long>(sturm_count(H, eb)) - static_cast<long>(sturm_count(H, ea));
}

PointSample sample_discrete_points(const PotentialSpec& spec, const SpectralWindow& w, double lo,
                                   double hi, SeedSpec seed, double tol) {
  const auto H = build_hamiltonian(spec, seed);
  const std::size_t n = H.size();
  const double s = shift_for(w, n, ShiftConvention::lattice);
  const auto eigs =
      eigenvalues_in_interval(H, w.to_energy(lo + s, n), w.to_energy(hi + s, n), tol);
  PointSample p;
  p.points = rescale_and_shift(eigs, w, n).points;
  p.lo = lo;
  p.hi = hi;
  p.provenance = Provenance::discrete_operator;
  p.parameter = w.tau_for(spec.sigma);
  p.seed = seed;
  return p;
}

double theta_density(double x, double tau) {
  const double sd = std::sqrt(1.5 * tau);
  const double y = x - kTwoPi * std::floor(x / kTwoPi);
  const long K = static_cast<long>(std::ceil(12.0 * sd / kTwoPi)) + 2;
  double s = 0.0;
  for (long k = -K; k <= K; ++k) s += stats::normal_pdf((y + kTwoPi * double(k)) / sd);
  return s / sd;
}

double theta_mass(double a, double b, double tau) {
  if (b < a) throw std::invalid_argument("theta_mass needs a <= b");
  const double sd = std::sqrt(1.5 * tau);
  const long k0 = static_cast<long>(std::floor((-b - 12.0 * sd) / kTwoPi)) - 1;
  const long k1 = static_cast<long>(std::ceil((12.0 * sd - a) / kTwoPi)) + 1;
  double s = 0.0;
  for (long k = k0; k <= k1; ++k) {
    const double sh = kTwoPi * double(k);
    s += stats::normal_cdf((b + sh) / sd) - stats::normal_cdf((a + sh) / sd);
  }
  return s;
}

nlohmann::json StatReport::to_json() const {
  auto num = [](double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(); };
  return {{"name", name},         {"estimate", num(estimate)}, {"stderr", num(stderr_)},
          {"n", n},               {"reference", num(reference)},
          {"statistic", num(statistic)}, {"p_value", num(p_value)},
          {"verdict", verdict ? "pass" : "fail"}, {"details", details}};
}

StatReport intensity_report(double tau, std::span<const double> points,
                            std::span<const long> window_counts, int bins, double alpha) {
  if (window_counts.size() < 2) throw std::invalid_argument("intensity report needs samples");
  if (bins < 2) throw std::invalid_argument("need at least two bins");
  std::vector<double> obs(bins, 0.0), expected(bins, 0.0);
  for (double x : points) {
    const double y = x - kTwoPi * std::floor(x / kTwoPi);
    const int b = std::min(bins - 1, static_cast<int>(y / kTwoPi * bins));
    obs[b] += 1.0;
  }
  nlohmann::json rows = nlohmann::json::array();
  for (int b = 0; b < bins; ++b) {
    const double a0 = kTwoPi * b / bins, a1 = kTwoPi * (b + 1) / bins;
    expected[b] = double(points.size()) * theta_mass(a0, a1, tau);
    rows.push_back({{"center", 0.5 * (a0 + a1)},
                    {"observed_density", obs[b] / (double(points.size()) * (a1 - a0))},
                    {"theta_density", theta_density(0.5 * (a0 + a1), tau)},
                    {"observed", obs[b]},
                    {"expected", expected[b]}});
  }
  const auto chi = stats::chi2_gof(obs, expected);
  std::vector<double> wc(window_counts.begin(), window_counts.end());
  StatReport r;
  r.name = "intensity";
  r.estimate = stats::mean(wc);
  r.stderr_ = stats::stderr_mean(wc);
  r.n = window_counts.size();
  r.reference = 1.0;
  r.statistic = chi.statistic;
  r.p_value = chi.p_value;
  const bool mean_ok = std::abs(r.estimate - 1.0) <= 3.0 * r.stderr_;
  r.verdict = chi.p_value > alpha && mean_ok;
  r.details = {{"tau", tau},           {"bins", rows},         {"points", points.size()},
               {"chi2_dof", chi.dof},  {"alpha", alpha},       {"mean_count_ok", mean_ok},
               {"chi2_ok", chi.p_value > alpha}};
  return r;
}

StatReport gap_report(double tau, std::span<const double> lambdas,
                      const std::vector<std::vector<char>>& empty, double lo, double hi) {
  if (lambdas.size() != empty.size()) throw std::invalid_argument("gap report: size mismatch");
  StatReport r;
  r.name = "gap";
  r.details = {{"tau", tau}, {"band", {lo, hi}}, {"rows", nlohmann::json::array()}};
  bool ok = true;
  double prev_p = 2.0;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    const double lam = lambdas[i];
    std::size_t hits = 0;
    for (char e : empty[i]) hits += e != 0;
    const auto pr = proportion(hits, empty[i].size());
    const double scale = lam * lam / (4.0 * tau);
    nlohmann::json row = {{"lambda", lam}, {"p_hat", pr.p}, {"stderr", pr.se}, {"hits", hits},
                          {"n", pr.n}};
    if (lam == 0.0) {
      row["note"] = "degenerate interval";
    } else if (hits == 0) {
      // One-sided 95% bound: P < 3/N, hence the ratio exceeds -log(3/N)/scale.
      const double pmax = 3.0 / double(pr.n);
      const double rmin = -std::log(pmax) / scale;
      row["one_sided"] = true;
      row["p_upper"] = pmax;
      row["ratio_lower"] = rmin;
      const bool within = rmin <= hi;
      row["within_band"] = within;
      ok = ok && within;
      r.estimate = rmin;
    } else {
      const double ratio = -std::log(pr.p) / scale;
      const double ratio_se = pr.se / pr.p / scale;
      row["ratio"] = ratio;
      row["ratio_stderr"] = ratio_se;
      const bool within = ratio >= lo && ratio <= hi;
      row["within_band"] = within;
      ok = ok && within;
      r.estimate = ratio;
      r.stderr_ = ratio_se;
    }
    const bool decreasing = pr.p < prev_p;
    row["decreasing"] = decreasing;
    ok = ok && decreasing;
    prev_p = pr.p;
    r.n = std::max(r.n, pr.n);
    r.details["rows"].push_back(row);
  }
  r.reference = 1.0;
  r.verdict = ok;
  return r;
}

double repulsion_bound_short(double tau, double eps) {
  const double x = std::log(tau / eps) - tau;
  return x >= 0.0 ? 4.0 * std::exp(-x * x / tau) : kNaN;
}

double repulsion_bound_long(double tau, double eps) {
  const double x = std::log(kTwoPi / eps) - tau - 1.0;
  return x >= 0.0 ? 4.0 * std::exp(-x * x / tau) : kNaN;
}

StatReport repulsion_report(double tau, std::span<const double> eps,
                            const std::vector<std::vector<long>>& counts, double min_slope) {
  if (eps.size() != counts.size()) throw std::invalid_argument("repulsion report: size mismatch");
  StatReport r;
  r.name = "repulsion";
  r.details = {{"tau", tau}, {"rows", nlohmann::json::array()}};
  bool bounds_ok = true;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    std::size_t hits = 0;
    for (long c : counts[i]) hits += c >= 2;
    const auto pr = proportion(hits, counts[i].size());
    const double b1 = repulsion_bound_short(tau, eps[i]);
    const double b2 = repulsion_bound_long(tau, eps[i]);
    double bmin = kNaN;
    for (double b : {b1, b2}) {
      if (std::isfinite(b)) bmin = std::isfinite(bmin) ? std::min(bmin, b) : b;
    }
    const bool applicable = std::isfinite(bmin);
    const bool holds = !applicable || pr.p <= bmin;
    bounds_ok = bounds_ok && holds;
    auto num = [](double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(); };
    r.details["rows"].push_back({{"eps", eps[i]},
                                 {"p_hat", pr.p},
                                 {"stderr", pr.se},
                                 {"hits", hits},
                                 {"n", pr.n},
                                 {"bound_short", num(b1)},
                                 {"bound_long", num(b2)},
                                 {"applicable", applicable},
                                 {"holds", holds}});
    if (hits > 0) {
      lx.push_back(std::log(eps[i]));
      ly.push_back(std::log(pr.p));
    }
    r.n = std::max(r.n, pr.n);
  }
  bool slope_ok = false;
  if (lx.size() >= 2) {
    const auto fit = stats::linear_fit(lx, ly);
    r.estimate = fit.slope;
    if (lx.size() > 2) r.stderr_ = fit.slope_stderr;
    slope_ok = fit.slope > min_slope;
  } else {
    r.details["slope_note"] = "fewer than two epsilon values with observed events";
  }
  r.reference = min_slope;
  r.details["bounds_ok"] = bounds_ok;
  r.details["slope_ok"] = slope_ok;
  r.details["slope_points"] = lx.size();
  r.verdict = bounds_ok && slope_ok;
  return r;
}

StatReport clt_report(double tau, double lambda, std::span<const double> phi0,
                      std::span<const double> phil_minus_lambda, double tol) {
  const double v0 = stats::variance(phi0), v1 = stats::variance(phil_minus_lambda);
  const double c = stats::covariance(phi0, phil_minus_lambda);
  const double s0 = stats::stderr_variance(phi0), s1 = stats::stderr_variance(phil_minus_lambda);
  const double sc = stats::stderr_covariance(phi0, phil_minus_lambda);
  const double rv = 1.5 * tau, rc = tau;
  StatReport r;
  r.name = "clt";
  r.estimate = c;
  r.stderr_ = sc;
  r.n = phi0.size();
  r.reference = rc;
  const bool ok = std::abs(v0 - rv) < tol && std::abs(v1 - rv) < tol && std::abs(c - rc) < tol;
  r.verdict = ok;
  r.details = {{"tau", tau},
               {"lambda", lambda},
               {"covariance", {{v0, c}, {c, v1}}},
               {"stderr", {{s0, sc}, {sc, s1}}},
               {"reference", {{rv, rc}, {rc, rv}}},
               {"means", {stats::mean(phi0), stats::mean(phil_minus_lambda)}},
               {"var_phi0_within_3se", std::abs(v0 - rv) <= 3.0 * s0},
               {"tolerance", tol}};
  return r;
}

StatReport sine_beta_clt_report(double beta, std::span<const double> lambdas,
                                const std::vector<std::vector<long>>& counts, double rel_tol) {
  if (lambdas.size() != counts.size() || lambdas.empty()) {
    throw std::invalid_argument("sine-beta report: size mismatch");
  }
  const double target = 2.0 / (beta * std::numbers::pi * std::numbers::pi);
  StatReport r;
  r.name = "sine_beta_clt";
  r.reference = target;
  r.details = {{"beta", beta}, {"rows", nlohmann::json::array()}};
  bool means_ok = true, var_ok = false;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    std::vector<double> x(counts[i].begin(), counts[i].end());
    const double lam = lambdas[i];
    const double m = stats::mean(x), sm = stats::stderr_mean(x);
    const double v = stats::variance(x), sv = stats::stderr_variance(x);
    const bool mean_ok = std::abs(m - lam / kTwoPi) <= 3.0 * sm;
    means_ok = means_ok && mean_ok;
    nlohmann::json row = {{"lambda", lam},   {"mean", m},     {"mean_stderr", sm},
                          {"mean_reference", lam / kTwoPi}, {"mean_ok", mean_ok},
                          {"variance", v},   {"variance_stderr", sv}};
    if (lam > 1.0) {
      const double ratio = v / std::log(lam);
      row["ratio"] = ratio;
      row["ratio_stderr"] = sv / std::log(lam);
      if (i + 1 == lambdas.size()) {
        var_ok = std::abs(ratio - target) <= rel_tol * target;
        r.estimate = ratio;
        r.stderr_ = sv / std::log(lam);
      }
    }
    r.details["rows"].push_back(row);
    r.n = std::max(r.n, x.size());
  }
  r.details["means_ok"] = means_ok;
  r.details["variance_ok"] = var_ok;
  r.details["relative_tolerance"] = rel_tol;
  r.verdict = means_ok && var_ok;
  return r;
}

double sup_density(OmegaKind kind) {
  if (kind == OmegaKind::gaussian) return 1.0 / std::sqrt(kTwoPi);
  throw std::invalid_argument("omega kind has no bounded density");
}

StatReport wegner_minami_report(const PotentialSpec& spec,
                                std::span<const std::pair<double, double>> windows,
                                const std::vector<std::vector<long>>& counts) {
  if (windows.size() != counts.size()) throw std::invalid_argument("wegner report: size mismatch");
  const double g = sup_density(spec.omega);
  const double n = double(spec.n), s = spec.sigma;
  auto wegner = [&](double L, double nn) { return std::sqrt(nn) / s * g * L; };
  auto minami = [&](double L, double nn) {
    return std::numbers::pi * std::numbers::pi / 2.0 * nn / (s * s) * g * g * L * L;
  };
  StatReport r;
  r.name = "wegner_minami";
  r.details = {{"n", spec.n}, {"sigma", s}, {"sup_g", g}, {"rows", nlohmann::json::array()}};
  bool ok = true;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const double L = windows[i].second - windows[i].first;
    std::size_t h1 = 0, h2 = 0;
    for (long c : counts[i]) {
      h1 += c >= 1;
      h2 += c >= 2;
    }
    const auto p1 = proportion(h1, counts[i].size()), p2 = proportion(h2, counts[i].size());
    const double b1 = wegner(L, n), b2 = minami(L, n);
    const bool holds = p1.p <= b1 && p2.p <= b2;
    ok = ok && holds;
    nlohmann::json growth = nlohmann::json::array();
    for (double nn : {500.0, 2000.0, 8000.0, 32000.0}) {
      growth.push_back({{"n", nn}, {"wegner", wegner(L, nn)}, {"minami", minami(L, nn)}});
    }
    r.details["rows"].push_back({{"window", {windows[i].first, windows[i].second}},
                                 {"p_ge1", p1.p},
                                 {"p_ge1_stderr", p1.se},
                                 {"wegner_bound", b1},
                                 {"p_ge2", p2.p},
                                 {"p_ge2_stderr", p2.se},
                                 {"minami_bound", b2},
                                 {"holds", holds},
                                 {"bound_growth_fixed_window", growth}});
    r.n = std::max(r.n, p1.n);
    if (i == 0) {
      r.estimate = p1.p;
      r.stderr_ = p1.se;
      r.reference = b1;
    }
  }
  r.verdict = ok;
  return r;
}

StatReport compare_distributions(std::span<const long> a, std::span<const long> b,
                                 std::string name) {
  const auto chi = stats::chi2_two_sample_counts(a, b);
  StatReport r;
  r.name = std::move(name);
  r.estimate = stats::ks_distance_counts(a, b);
  r.n = std::min(a.size(), b.size());
  r.reference = 0.0;
  r.statistic = chi.statistic;
  r.p_value = chi.p_value;
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  // Scale of the KS distance under the null.
  r.stderr_ = std::sqrt(1.0 / double(a.size()) + 1.0 / double(b.size()));
  r.verdict = chi.p_value > 1e-3;
  r.details = {{"chi2_dof", chi.dof},
               {"ks_distance", r.estimate},
               {"mean_a", stats::mean(x)},
               {"mean_b", stats::mean(y)},
               {"n_a", a.size()},
               {"n_b", b.size()}};
  return r;
}

}  // namespace schrolab
