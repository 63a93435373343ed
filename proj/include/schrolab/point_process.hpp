#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "schrolab/operator_model.hpp"
#include "schrolab/randomness.hpp"
#include "schrolab/sde.hpp"

namespace schrolab {

enum class Provenance { discrete_operator, phase_sde, carousel, sine_beta_sde };
std::string_view to_string(Provenance p);

struct PointSample {
  std::vector<double> points;  // strictly increasing, inside [lo, hi]
  double lo = 0.0, hi = 0.0;
  Provenance provenance = Provenance::phase_sde;
  double parameter = 0.0;  // tau or beta
  SeedSpec seed;
  int refinements = 0;     // dt halvings needed for monotonicity
};

// Phases phi^{lambda/tau}(tau) for rescaled lambda values on one tape.
std::vector<double> sch_phases(double tau, std::span<const double> lambdas, const TapeView& tape);

// Number of lattice points 2 pi k in [a, b).
long lattice_count(double a, double b);

// Sch_tau points in [lo, hi]: lattice crossings of phi^{lambda/tau}(tau) are
// bracketed on a grid of spacing at most grid_step and bisected in lambda on
// the same tape to width tol_lambda. A decrease across the grid halves dt on
// the bridge-refined tape (up to three times) before NumericalError.
PointSample sample_sch_points(double tau, double lo, double hi, const NoiseTape& tape,
                              double tol_lambda = 1e-4, double grid_step = 1.0);

// Counts of Sch_tau in [a_i, b_i) for each interval, from phases only.
std::vector<long> sch_counts(double tau, std::span<const std::pair<double, double>> intervals,
                             const TapeView& tape);

struct SineBetaCounts {
  std::vector<long> counts;
  double max_residual = 0.0;  // max |alpha/(2 pi) - count|
  bool insufficient_tmax = false;  // max_residual > 0.2
};

// g(lambda) = round(alpha^lambda(Tmax) / (2 pi)) for the sine-beta relative phase.
SineBetaCounts count_sine_beta(double beta, std::span<const double> grid, const TapeView& tape,
                               double tmax);

// Carousel count in [0, L] at noise tau with angle offset U in [0, 2 pi).
long carousel_count(double tau, double L, double U, const TapeView& tape);

// Sch_tau* = Sch_tau + U count in [0, L].
long sch_star_count(double tau, double L, double U, const TapeView& tape);

// Shifted rescaled eigenvalue count of the discrete model in [a, b) via Sturm.
long discrete_count(const Hamiltonian& H, const SpectralWindow& w, double a, double b,
                    ShiftConvention conv = ShiftConvention::lattice);

// Shifted rescaled eigenvalues of one instance in [lo, hi].
PointSample sample_discrete_points(const PotentialSpec& spec, const SpectralWindow& w, double lo,
                                   double hi, SeedSpec seed, double tol = 1e-12);

// Sum_k p(2 pi k + x) with p the Normal(0, 3 tau / 2) density.
double theta_density(double x, double tau);
// Integral of theta_density over [a, b] (any real a < b).
double theta_mass(double a, double b, double tau);

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct StatReport {
  std::string name;
  double estimate = kNaN;
  double stderr_ = kNaN;
  std::size_t n = 0;
  double reference = kNaN;
  double statistic = kNaN;
  double p_value = kNaN;
  bool verdict = false;
  nlohmann::json details = nlohmann::json::object();

  nlohmann::json to_json() const;
};

// Histogram of points mod 2 pi against the theta density (chi^2, `bins` bins)
// and the mean count per 2 pi window. points_per_sample holds every sample's
// points in a window spanning whole periods; window_counts the per-sample
// counts in one reference 2 pi window.
StatReport intensity_report(double tau, std::span<const double> points,
                            std::span<const long> window_counts, int bins = 24,
                            double alpha = 1e-3);

// Gap probabilities P(Sch[0, lambda] = 0). empty[i][s] is whether sample s had
// no point in [0, lambdas[i]].
StatReport gap_report(double tau, std::span<const double> lambdas,
                      const std::vector<std::vector<char>>& empty, double lo = 0.5,
                      double hi = 1.8);

// Two-point repulsion P(Sch[0, eps] >= 2) against the bounds
// 4 exp(-(log(tau/eps) - tau)^2 / tau) and 4 exp(-(log(2 pi/eps) - tau - 1)^2 / tau),
// plus the log-log slope.
StatReport repulsion_report(double tau, std::span<const double> eps,
                            const std::vector<std::vector<long>>& counts,
                            double min_slope = 3.0);

double repulsion_bound_short(double tau, double eps);  // nan when inapplicable
double repulsion_bound_long(double tau, double eps);   // nan when inapplicable

// Covariance of (phi^0(tau), phi^lambda(tau) - lambda) against
// [[3 tau/2, tau], [tau, 3 tau/2]], entrywise tolerance tol.
StatReport clt_report(double tau, double lambda, std::span<const double> phi0,
                      std::span<const double> phil_minus_lambda, double tol = 0.1);

// Var(count - lambda/2pi)/log(lambda) against 2/(beta pi^2) at each lambda and
// the mean counts against lambda/(2 pi). counts[i][s] for lambdas[i].
StatReport sine_beta_clt_report(double beta, std::span<const double> lambdas,
                                const std::vector<std::vector<long>>& counts,
                                double rel_tol = 0.25);

// Wegner (>= 1) and Minami (>= 2) bounds in rescaled units; counts[i][s] for
// windows[i]. Rejects omega kinds without a bounded density.
StatReport wegner_minami_report(const PotentialSpec& spec,
                                std::span<const std::pair<double, double>> windows,
                                const std::vector<std::vector<long>>& counts);
double sup_density(OmegaKind kind);

// Two-sample chi^2 (pooled tails) and KS distance on integer counts.
StatReport compare_distributions(std::span<const long> a, std::span<const long> b,
                                 std::string name = "compare");

}  // namespace schrolab
