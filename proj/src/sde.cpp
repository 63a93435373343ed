#include "schrolab/sde.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "schrolab/operator_model.hpp"

namespace schrolab {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool should_record(std::size_t k, std::size_t steps, std::size_t every) {
  if (k == steps) return true;
  return every != 0 && k % every == 0;
}

void require_sorted(std::span<const double> grid) {
  if (grid.empty()) throw std::invalid_argument("lambda grid is empty");
  if (!std::is_sorted(grid.begin(), grid.end())) {
    throw std::invalid_argument("lambda grid must be sorted");
  }
}

void record_row(std::vector<double>& times, std::vector<std::vector<double>>& rows, double t,
                std::span<const double> v) {
  times.push_back(t);
  rows.emplace_back(v.begin(), v.end());
}

// Shared stepping loop for the phase kinds. Calls emit(k, t, phi) after step k.
template <class Emit>
void run_phase(PhaseKind kind, std::span<const double> grid, std::size_t steps,
               const TapeView& tape, const PhaseOptions& opt, std::span<double> phi, Emit&& emit) {
  const double dt = tape.dt();
  std::fill(phi.begin(), phi.end(), 0.0);
  const std::size_t m = grid.size();
  switch (kind) {
    case PhaseKind::critical:
    case PhaseKind::decaying: {
      const auto B = tape.channel(Channel::B);
      const auto B2 = tape.channel(Channel::B2);
      const auto B3 = tape.channel(Channel::B3);
      const bool decaying = kind == PhaseKind::decaying;
      for (std::size_t k = 0; k < steps; ++k) {
        const double g = decaying ? opt.sigma_rho / std::sqrt(1.0 - double(k) * dt) : 1.0;
        const double db = g * B[k], a = g * kInvSqrt2 * B2[k], b = g * kInvSqrt2 * B3[k];
        for (std::size_t j = 0; j < m; ++j) {
          const double c = std::cos(phi[j]), s = std::sin(phi[j]);
          phi[j] += grid[j] * dt + db + c * a + s * b;
        }
        emit(k + 1, double(k + 1) * dt, phi);
      }
      break;
    }
    case PhaseKind::critical_e0: {
      const auto B1 = tape.channel(Channel::B1);
      const auto B2 = tape.channel(Channel::B2);
      const bool stated = opt.e0_drift == E0Drift::stated;
      for (std::size_t k = 0; k < steps; ++k) {
        for (std::size_t j = 0; j < m; ++j) {
          const double p = phi[j];
          const double drift = stated ? 0.25 * std::cos(2.0 * p) : -0.25 * std::sin(2.0 * p);
          phi[j] += (grid[j] + drift) * dt + B1[k] + std::cos(p) * B2[k];
        }
        emit(k + 1, double(k + 1) * dt, phi);
      }
      break;
    }
  }
}

void check_horizon_for_kind(PhaseKind kind, double horizon) {
  if (kind == PhaseKind::decaying && !(horizon < 1.0)) {
    throw std::invalid_argument("decaying kind needs horizon < 1 (coefficient singular at t = 1)");
  }
}

}  // namespace

PhaseKind parse_phase_kind(std::string_view name) {
  if (name == "critical") return PhaseKind::critical;
  if (name == "critical-E0" || name == "critical_e0" || name == "e0") return PhaseKind::critical_e0;
  if (name == "decaying") return PhaseKind::decaying;
  throw std::invalid_argument("unknown phase kind: " + std::string(name));
}

std::string_view to_string(PhaseKind k) {
  switch (k) {
    case PhaseKind::critical: return "critical";
    case PhaseKind::critical_e0: return "critical-E0";
    case PhaseKind::decaying: return "decaying";
  }
  return "?";
}

std::size_t steps_for(const TapeView& tape, double horizon) {
  if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
  const double r = horizon / tape.dt();
  const double n = std::round(r);
  if (std::abs(r - n) > 1e-9 * std::max(1.0, r)) {
    throw std::invalid_argument("horizon is not a whole number of tape steps");
  }
  const auto steps = static_cast<std::size_t>(n);
  if (steps == 0 || steps > tape.steps()) {
    throw std::invalid_argument("horizon exceeds the tape");
  }
  return steps;
}

void phase_final(PhaseKind kind, std::span<const double> grid, double horizon,
                 const TapeView& tape, std::span<double> out, const PhaseOptions& opt) {
  if (out.size() != grid.size()) throw std::invalid_argument("output size mismatch");
  check_horizon_for_kind(kind, horizon);
  const std::size_t steps = steps_for(tape, horizon);
  run_phase(kind, grid, steps, tape, opt, out, [](std::size_t, double, std::span<const double>) {});
}

PhasePathFamily integrate_phase_family(PhaseKind kind, std::span<const double> grid,
                                       double horizon, const NoiseTape& tape,
                                       const PhaseOptions& opt) {
  require_sorted(grid);
  check_horizon_for_kind(kind, horizon);
  NoiseTape cur = tape;
  for (int r = 0;; ++r) {
    const std::size_t steps = steps_for(cur, horizon);
    const std::size_t every = opt.record_every == 0 ? 0 : opt.record_every << r;
    PhasePathFamily f;
    f.kind = kind;
    f.lambda_grid.assign(grid.begin(), grid.end());
    f.dt = cur.dt();
    f.horizon = horizon;
    f.refinements = r;
    std::vector<double> phi(grid.size(), 0.0);
    record_row(f.times, f.values, 0.0, phi);
    run_phase(kind, grid, steps, cur, opt, phi,
              [&](std::size_t k, double t, std::span<const double> v) {
                if (should_record(k, steps, every)) record_row(f.times, f.values, t, v);
              });
    bool monotone = true;
    const auto& fin = f.final_values();
    for (std::size_t j = 1; j < fin.size(); ++j) {
      if (fin[j] < fin[j - 1] - opt.monotone_tol) monotone = false;
    }
    if (monotone) return f;
    if (r >= opt.max_refinements) {
      throw NumericalError("phase family not monotone in lambda after dt refinement");
    }
    cur = cur.refined();
  }
}

MatrixKind parse_matrix_kind(std::string_view name) {
  if (name == "generic") return MatrixKind::generic;
  if (name == "E0" || name == "e0") return MatrixKind::e0;
  if (name == "decaying") return MatrixKind::decaying;
  throw std::invalid_argument("unknown matrix kind: " + std::string(name));
}

MatrixPath integrate_matrix(MatrixKind kind, cplx lambda, MatrixInit init, double horizon,
                            const TapeView& tape, const MatrixOptions& opt) {
  if (kind == MatrixKind::decaying && !(horizon < 1.0)) {
    throw std::invalid_argument("decaying kind needs horizon < 1");
  }
  const std::size_t steps = steps_for(tape, horizon);
  const double dt = tape.dt();
  MatrixPath p;
  p.kind = kind;
  p.lambda = lambda;
  p.init = init;
  p.initial = init == MatrixInit::identity ? CMat2::identity()
                                           : DiagonalizationData::of(opt.E).Zinv;
  CMat2 X = p.initial;
  p.times.push_back(0.0);
  p.X.push_back(X);
  const cplx I(0.0, 1.0);
  const CMat2 A{0.5 * I * lambda * dt, 0.0, 0.0, -0.5 * I * lambda * dt};
  for (std::size_t k = 0; k < steps; ++k) {
    CMat2 N;
    if (kind == MatrixKind::e0) {
      const double b1 = tape.channel(Channel::B1)[k], b2 = tape.channel(Channel::B2)[k];
      N = {I * b1, I * b2, -I * b2, -I * b1};
    } else {
      const double g =
          kind == MatrixKind::decaying ? opt.sigma_rho / std::sqrt(1.0 - double(k) * dt) : 1.0;
      const double b = tape.channel(Channel::B)[k];
      const cplx w(kInvSqrt2 * tape.channel(Channel::B2)[k],
                   kInvSqrt2 * tape.channel(Channel::B3)[k]);
      N = g * CMat2{I * b, w, std::conj(w), -I * b};
    }
    X = X + A * X + 0.5 * (N * X);
    if (should_record(k + 1, steps, opt.record_every)) {
      p.times.push_back(double(k + 1) * dt);
      p.X.push_back(X);
    }
  }
  return p;
}

CMat2 conjugate_to_q(const CMat2& X, double E) {
  const auto dd = DiagonalizationData::of(E);
  return dd.Z * X * dd.Zinv;
}

std::vector<double> phase_from_matrix(const MatrixPath& path) {
  std::vector<double> phi;
  phi.reserve(path.X.size());
  double prev = 0.0;
  for (std::size_t k = 0; k < path.X.size(); ++k) {
    const double a = std::arg(path.X[k].a - path.X[k].b);
    if (k == 0) {
      phi.push_back(2.0 * a);
    } else {
      phi.push_back(phi.back() + 2.0 * std::remainder(a - prev, kTwoPi));
    }
    prev = a;
  }
  return phi;
}

RelativeKind parse_relative_kind(std::string_view name) {
  if (name == "critical") return RelativeKind::critical;
  if (name == "decaying") return RelativeKind::decaying;
  if (name == "sine-beta" || name == "sine_beta") return RelativeKind::sine_beta;
  throw std::invalid_argument("unknown relative kind: " + std::string(name));
}

RelativePhasePath integrate_relative_family(RelativeKind kind, std::span<const double> grid,
                                            double horizon, const TapeView& tape,
                                            const RelativeOptions& opt) {
  require_sorted(grid);
  if (kind == RelativeKind::decaying && !(horizon < 1.0)) {
    throw std::invalid_argument("decaying kind needs horizon < 1");
  }
  if (kind == RelativeKind::sine_beta && !(opt.beta > 0.0)) {
    throw std::invalid_argument("beta must be positive");
  }
  const std::size_t steps = steps_for(tape, horizon);
  const double dt = tape.dt();
  RelativePhasePath p;
  p.kind = kind;
  p.lambda_grid.assign(grid.begin(), grid.end());
  p.beta = kind == RelativeKind::sine_beta ? opt.beta : 0.0;
  std::vector<double> al(grid.size(), 0.0);
  record_row(p.times, p.values, 0.0, al);
  const bool sb = kind == RelativeKind::sine_beta;
  const auto X = tape.channel(sb ? Channel::B1 : Channel::B2);
  const auto Y = tape.channel(sb ? Channel::B2 : Channel::B3);
  const double scale = sb ? 1.0 : kInvSqrt2;
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = double(k) * dt;
    double drift = dt, g = 1.0;
    // Exact integral of the decaying drift over the step.
    if (sb) drift = std::exp(-0.25 * opt.beta * t) * -std::expm1(-0.25 * opt.beta * dt);
    if (kind == RelativeKind::decaying) g = opt.sigma_rho / std::sqrt(1.0 - t);
    const double a = g * scale * X[k], b = g * scale * Y[k];
    for (std::size_t j = 0; j < al.size(); ++j) {
      const double c = std::cos(al[j]), s = std::sin(al[j]);
      al[j] += grid[j] * drift + (c - 1.0) * a + s * b;
    }
    if (should_record(k + 1, steps, opt.record_every)) {
      record_row(p.times, p.values, double(k + 1) * dt, al);
    }
  }
  return p;
}

RelativePhasePath integrate_decaying_warped(std::span<const double> grid, double beta,
                                            double sigma_rho, double delta,
                                            const TapeView& s_tape, std::size_t record_every) {
  require_sorted(grid);
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
  const double ds = s_tape.dt();
  const double s_max = -4.0 / beta * std::log(delta);
  const auto steps = static_cast<std::size_t>(std::floor(s_max / ds + 1e-9));
  if (steps == 0 || steps > s_tape.steps()) throw std::invalid_argument("tape too short");
  const auto B1 = s_tape.channel(Channel::B1);
  const auto B2 = s_tape.channel(Channel::B2);
  RelativePhasePath p;
  p.kind = RelativeKind::decaying;
  p.lambda_grid.assign(grid.begin(), grid.end());
  p.beta = beta;
  std::vector<double> al(grid.size(), 0.0);
  record_row(p.times, p.values, 0.0, al);
  const double q = -std::expm1(-0.25 * beta * ds);
  for (std::size_t k = 0; k < steps; ++k) {
    const double s = double(k) * ds;
    const double one_minus_t = std::exp(-0.25 * beta * s);
    const double dt = one_minus_t * q;
    const double g = sigma_rho / std::sqrt(one_minus_t);
    const double w = std::sqrt(dt / (2.0 * ds));
    const double a = g * w * B1[k], b = g * w * B2[k];
    for (std::size_t j = 0; j < al.size(); ++j) {
      const double c = std::cos(al[j]), sn = std::sin(al[j]);
      al[j] += grid[j] * dt + (c - 1.0) * a + sn * b;
    }
    if (should_record(k + 1, steps, record_every)) {
      record_row(p.times, p.values, double(k + 1) * ds, al);
    }
  }
  return p;
}

double sine_beta_tmax(double beta, double lambda_max) {
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
  const double x = beta * lambda_max / 4.0;
  return (x > 1.0 ? 4.0 / beta * std::log(x) : 0.0) + 20.0;
}

DerivativePath integrate_derivative(double lambda, double horizon, const TapeView& tape,
                                    bool second, std::size_t record_every) {
  const std::size_t steps = steps_for(tape, horizon);
  const double dt = tape.dt();
  const auto B = tape.channel(Channel::B);
  const auto B2 = tape.channel(Channel::B2);
  const auto B3 = tape.channel(Channel::B3);
  DerivativePath p;
  double phi = 0.0, w = 0.0, w2 = 0.0;
  auto rec = [&](double t) {
    p.times.push_back(t);
    p.phi.push_back(phi);
    p.varpi.push_back(w);
    if (second) p.phi2.push_back(w2);
  };
  rec(0.0);
  for (std::size_t k = 0; k < steps; ++k) {
    const double a = kInvSqrt2 * B2[k], b = kInvSqrt2 * B3[k];
    const double c = std::cos(phi), s = std::sin(phi);
    const double re = c * a + s * b, im = c * b - s * a;
    const double nw = w + dt + w * im;
    if (second) w2 += w2 * im - w * w * re;
    phi += lambda * dt + B[k] + re;
    w = nw;
    if (should_record(k + 1, steps, record_every)) rec(double(k + 1) * dt);
  }
  return p;
}

double sample_derivative_functional(double t, const TapeView& tape) {
  if (!(t > 0.0)) throw std::invalid_argument("t must be positive");
  const std::size_t steps = steps_for(tape, t);
  const double dt = tape.dt();
  const auto B = tape.channel(Channel::B);
  std::vector<double> path(steps + 1, 0.0);
  for (std::size_t k = 0; k < steps; ++k) path[k + 1] = path[k] + B[k];
  const double bt = path[steps];
  auto f = [&](std::size_t k) {
    return std::exp(-(path[k] - bt) * kInvSqrt2 + (double(k) * dt - t) / 4.0);
  };
  double s = 0.5 * (f(0) + f(steps));
  for (std::size_t k = 1; k < steps; ++k) s += f(k);
  return s * dt;
}

LogtanPath integrate_logtan(double epsilon, double tau, const TapeView& tape, double Y0,
                            double cap, std::size_t record_every) {
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
  if (!std::isfinite(Y0)) throw std::invalid_argument("Y0 must be finite");
  const std::size_t steps = steps_for(tape, tau);
  const double dt = tape.dt();
  const auto B = tape.channel(Channel::B);
  // Exact flow of dY = c cosh(Y) dt: gd(Y) grows by c dt, and with
  // tan(gd(Y)) = sinh(Y) the addition formula gives sinh of the new value.
  const double T = std::tan(0.5 * epsilon / tau * dt);
  LogtanPath p;
  double y = Y0;
  p.times.push_back(0.0);
  p.Y.push_back(y);
  for (std::size_t k = 0; k < steps; ++k) {
    const double sh = std::sinh(y);
    const double den = 1.0 - sh * T;
    if (den <= 0.0) {
      p.exploded = true;
      p.stop_step = k + 1;
      break;
    }
    y = std::asinh((sh + T) / den);
    y += 0.25 * std::tanh(y) * dt + kInvSqrt2 * B[k];
    if (y > cap || y < -cap) {
      p.exploded = y > cap;
      p.exited_low = y < -cap;
      p.stop_step = k + 1;
      p.times.push_back(double(k + 1) * dt);
      p.Y.push_back(y);
      break;
    }
    if (should_record(k + 1, steps, record_every)) {
      p.times.push_back(double(k + 1) * dt);
      p.Y.push_back(y);
    }
    p.stop_step = k + 1;
  }
  return p;
}

CarouselPath integrate_carousel(std::span<const double> grid, double tau, const TapeView& tape,
                                std::size_t record_every) {
  require_sorted(grid);
  const std::size_t steps = steps_for(tape, tau);
  const double dt = tape.dt();
  const auto B2 = tape.channel(Channel::B2);
  const auto B3 = tape.channel(Channel::B3);
  CarouselPath p;
  p.lambda_grid.assign(grid.begin(), grid.end());
  cplx V(0.0, 0.0);
  std::vector<double> g(grid.size(), 0.0);
  auto rec = [&](double t) {
    const double r = std::abs(V);
    p.times.push_back(t);
    p.V.push_back(V);
    p.q.push_back(std::log1p(r) - std::log1p(-r));
    p.gamma.push_back(g);
  };
  rec(0.0);
  for (std::size_t k = 0; k < steps; ++k) {
    const double h = 1.0 - std::norm(V);
    for (std::size_t j = 0; j < g.size(); ++j) {
      g[j] += grid[j] * std::norm(std::polar(1.0, g[j]) - V) / h * dt;
    }
    V += 0.5 * h * cplx(kInvSqrt2 * B2[k], kInvSqrt2 * B3[k]);
    if (std::abs(V) >= 1.0 - 1e-8) {
      throw NumericalError("carousel left the disk at step " + std::to_string(k + 1) +
                           "; reduce dt (currently " + std::to_string(dt) + ")");
    }
    if (should_record(k + 1, steps, record_every)) rec(double(k + 1) * dt);
  }
  return p;
}

double carousel_angle(cplx V, double gamma) {
  const cplx one(1.0, 0.0);
  return gamma + 2.0 * std::arg(one - V * std::polar(1.0, -gamma)) - 2.0 * std::arg(one - V);
}

std::vector<double> q_from_radial_noise(const CarouselPath& path, const TapeView& tape,
                                        std::size_t start_step) {
  const double dt = tape.dt();
  const std::size_t steps = path.V.size() - 1;
  if (steps > tape.steps() || std::abs(path.times.back() - double(steps) * dt) > 1e-9) {
    throw std::invalid_argument("carousel path must be recorded at every step");
  }
  if (start_step >= steps || path.q[start_step] <= 0.0) {
    throw std::invalid_argument("start step must lie inside the path with q > 0");
  }
  const auto B2 = tape.channel(Channel::B2);
  const auto B3 = tape.channel(Channel::B3);
  std::vector<double> q{path.q[start_step]};
  for (std::size_t k = start_step; k < steps; ++k) {
    const cplx V = path.V[k];
    const cplx dY(kInvSqrt2 * B2[k], kInvSqrt2 * B3[k]);
    const double radial = std::real(std::conj(V / std::abs(V)) * dY);
    const double x = q.back();
    // Reflect at the origin, where the radial process has an entrance boundary.
    q.push_back(std::abs(x + radial + 0.25 / std::tanh(x) * dt));
  }
  return q;
}

}  // namespace schrolab
