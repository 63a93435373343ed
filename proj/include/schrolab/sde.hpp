#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "schrolab/randomness.hpp"
#include "schrolab/transfer.hpp"

// Euler-Maruyama integrators for the continuum limits. All integrators read
// their increments from a tape and use the tape's dt; the horizon must be a
// whole number of steps no longer than the tape. Noise conventions:
//   W = (B2 + i B3)/sqrt2 (E|dW|^2 = dt) for the critical and decaying kinds,
//   dB1 + i dB2 (unnormalized) for the sine-beta relative phase,
//   B, B1 real standard Brownian motions.
namespace schrolab {

enum class PhaseKind { critical, critical_e0, decaying };
PhaseKind parse_phase_kind(std::string_view name);
std::string_view to_string(PhaseKind k);

// Drift of the E = 0 phase SDE. stratonovich: -sin(2 phi)/4, the Ito form of
// the E = 0 matrix SDE. stated: +cos(2 phi)/4.
enum class E0Drift { stratonovich, stated };

struct PhaseOptions {
  double sigma_rho = 1.0;        // decaying kind: noise scale sigma rho / sqrt(1 - t)
  E0Drift e0_drift = E0Drift::stratonovich;
  std::size_t record_every = 0;  // 0 keeps only the initial and final values
  double monotone_tol = 1e-9;
  int max_refinements = 3;
};

struct PhasePathFamily {
  PhaseKind kind = PhaseKind::critical;
  std::vector<double> lambda_grid;
  double dt = 0.0;
  double horizon = 0.0;
  std::vector<double> times;
  std::vector<std::vector<double>> values;  // values[k][j]: phi at times[k], lambda_grid[j]
  int refinements = 0;

  const std::vector<double>& final_values() const { return values.back(); }
};

// Number of tape steps covering [0, horizon]; throws std::invalid_argument if
// horizon is not a multiple of dt or exceeds the tape.
std::size_t steps_for(const TapeView& tape, double horizon);

// Final phases only, no refinement. out.size() must equal grid.size().
void phase_final(PhaseKind kind, std::span<const double> grid, double horizon,
                 const TapeView& tape, std::span<double> out, const PhaseOptions& opt = {});

// Joint integration over a sorted grid. A final-time decrease across the grid
// beyond monotone_tol halves dt on the bridge-refined tape; NumericalError if
// it persists after max_refinements.
PhasePathFamily integrate_phase_family(PhaseKind kind, std::span<const double> grid,
                                       double horizon, const NoiseTape& tape,
                                       const PhaseOptions& opt = {});

enum class MatrixKind { generic, e0, decaying };
enum class MatrixInit { identity, zinv };
MatrixKind parse_matrix_kind(std::string_view name);

struct MatrixPath {
  MatrixKind kind = MatrixKind::generic;
  cplx lambda;
  MatrixInit init = MatrixInit::identity;
  CMat2 initial;
  std::vector<double> times;
  std::vector<CMat2> X;
};

struct MatrixOptions {
  double E = 1.0;          // energy for the Zinv initial condition
  double sigma_rho = 1.0;  // decaying kind
  std::size_t record_every = 0;
};

// dX = (1/2) diag(i lambda, -i lambda) X dt + (1/2) N X with
// N = ((i dB, dW), (conj dW, -i dB)) (generic), ((i dB1, i dB2), (-i dB2, -i dB1)) (e0),
// and the generic N scaled by sigma rho / sqrt(1 - t) (decaying).
MatrixPath integrate_matrix(MatrixKind kind, cplx lambda, MatrixInit init, double horizon,
                            const TapeView& tape, const MatrixOptions& opt = {});

// Q(t) = Z X(t) Zinv.
CMat2 conjugate_to_q(const CMat2& X, double E);

// Phase read off X: e^{i phi} = u / conj(u), u = X11 - X12, lifted along the path.
std::vector<double> phase_from_matrix(const MatrixPath& path);

enum class RelativeKind { critical, decaying, sine_beta };
RelativeKind parse_relative_kind(std::string_view name);

struct RelativeOptions {
  double beta = 2.0;       // sine-beta kind
  double sigma_rho = 1.0;  // decaying kind
  std::size_t record_every = 0;
};

struct RelativePhasePath {
  RelativeKind kind = RelativeKind::critical;
  std::vector<double> lambda_grid;
  double beta = 0.0;
  std::vector<double> times;
  std::vector<std::vector<double>> values;

  const std::vector<double>& final_values() const { return values.back(); }
};

// critical: d alpha = lambda dt + Re[(e^{-i alpha} - 1) dZ], dZ = (dB2 + i dB3)/sqrt2.
// sine_beta: d alpha = lambda (beta/4) e^{-beta t/4} dt + Re[(e^{-i alpha} - 1)(dB1 + i dB2)],
//   horizon is the truncation time Tmax; the drift is integrated exactly per step.
// decaying: d alpha = lambda dt + sigma rho / sqrt(1 - t) Re[(e^{-i alpha} - 1) dW],
//   dW = (dB2 + i dB3)/sqrt2, horizon < 1.
RelativePhasePath integrate_relative_family(RelativeKind kind, std::span<const double> grid,
                                            double horizon, const TapeView& tape,
                                            const RelativeOptions& opt = {});

// Decaying relative phase on the warped grid t_k = 1 - exp(-beta s_k / 4),
// s_k = k ds, driven by the s-tape through dW_t = sqrt(dt_k / (2 ds)) (dB1 + i dB2).
// Runs until s = -(4/beta) log(delta). Values are recorded per s-step like the
// sine-beta kind.
RelativePhasePath integrate_decaying_warped(std::span<const double> grid, double beta,
                                            double sigma_rho, double delta,
                                            const TapeView& s_tape,
                                            std::size_t record_every = 0);

// Default truncation for the sine-beta kind: (4/beta) log(beta lambda/4) + 20
// (the log term is dropped when beta lambda/4 <= 1).
double sine_beta_tmax(double beta, double lambda_max);

struct DerivativePath {
  std::vector<double> times;
  std::vector<double> phi, varpi;
  std::vector<double> phi2;  // second lambda-derivative; empty unless requested
};

// phi per the critical kind together with d varpi = dt + varpi Im[e^{-i phi} dW]
// and optionally d phi'' = phi'' Im[e^{-i phi} dW] - varpi^2 Re[e^{-i phi} dW].
DerivativePath integrate_derivative(double lambda, double horizon, const TapeView& tape,
                                    bool second = false, std::size_t record_every = 0);

// int_0^t exp(-(B_s - B_t)/sqrt2 + (s - t)/4) ds by the trapezoid rule on channel B.
double sample_derivative_functional(double t, const TapeView& tape);

struct LogtanPath {
  std::vector<double> times;
  std::vector<double> Y;
  bool exploded = false;        // Y crossed +cap (alpha reached 2 pi)
  bool exited_low = false;      // Y crossed -cap
  std::size_t stop_step = 0;    // step index at which integration stopped
};

// dY = (eps/tau)/2 cosh(Y) dt + tanh(Y)/4 dt + dB/sqrt2 by Lie splitting: the
// cosh drift by its exact flow (gd(Y) advances linearly, gd the Gudermannian),
// the rest by Euler-Maruyama. Channel B drives the noise.
LogtanPath integrate_logtan(double epsilon, double tau, const TapeView& tape, double Y0 = -30.0,
                            double cap = 50.0, std::size_t record_every = 0);

struct CarouselPath {
  std::vector<double> lambda_grid;
  std::vector<double> times;
  std::vector<cplx> V;
  std::vector<double> q;
  std::vector<std::vector<double>> gamma;  // gamma[k][j]
};

// dV = (1 - |V|^2)/2 dY with dY = (dB2 + i dB3)/sqrt2; gamma by explicit Euler on
// d gamma/dt = lambda |e^{i gamma} - V|^2 / (1 - |V|^2). NumericalError if |V|
// reaches 1 - 1e-8.
CarouselPath integrate_carousel(std::span<const double> grid, double tau, const TapeView& tape,
                                std::size_t record_every = 0);

// Hyperbolic angle at V between the boundary points 1 and e^{i gamma}, lifted so
// that it is increasing in gamma and vanishes at gamma = 0.
double carousel_angle(cplx V, double gamma);

// Euler-Maruyama of dq = dB/sqrt2 + coth(q)/4 dt from q(t0) = q0, with dB/sqrt2
// the radial component Re[conj(V/|V|) dY] of the carousel noise along path,
// reflected at q = 0.
std::vector<double> q_from_radial_noise(const CarouselPath& path, const TapeView& tape,
                                        std::size_t start_step);

}  // namespace schrolab
