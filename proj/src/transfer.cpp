#include "schrolab/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace schrolab {

CMat2 to_complex(const RMat2& m) { return {m.a, m.b, m.c, m.d}; }

double max_abs_diff(const CMat2& x, const CMat2& y) {
  return std::max({std::abs(x.a - y.a), std::abs(x.b - y.b), std::abs(x.c - y.c),
                   std::abs(x.d - y.d)});
}

double trace_mm_star(const CMat2& m) {
  return std::norm(m.a) + std::norm(m.b) + std::norm(m.c) + std::norm(m.d);
}

RMat2 transfer_matrix(double x) { return {x, -1.0, 1.0, 0.0}; }

DiagonalizationData DiagonalizationData::of(double E) {
  SpectralWindow w(E, 0.0);  // validates |E| < 2
  DiagonalizationData dd;
  dd.E = E;
  dd.z = w.z();
  const cplx zb = std::conj(dd.z);
  dd.Z = {zb, dd.z, 1.0, 1.0};
  dd.D = {zb, 0.0, 0.0, dd.z};
  const cplx k = 1.0 / (zb - dd.z);
  dd.Zinv = {k, -k * dd.z, -k, k * zb};
  return dd;
}

namespace {
// z^{2l} from the angle directly, so the error does not grow with l.
inline cplx z_pow_2l(const SpectralWindow& w, std::size_t ell) {
  const double theta = std::arg(w.z());
  return std::polar(1.0, std::remainder(2.0 * static_cast<double>(ell) * theta,
                                        2.0 * std::numbers::pi));
}
}  // namespace

CMat2 oscillating_matrix(const SpectralWindow& w, std::size_t ell) {
  const cplx p = z_pow_2l(w, ell);
  return {1.0, p, -std::conj(p), -1.0};
}

std::vector<cplx> perturbations(const SpectralWindow& w, std::span<const double> v, cplx lambda) {
  const double rn = w.rho() * static_cast<double>(v.size());
  std::vector<cplx> eps(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) eps[i] = lambda / rn - v[i];
  return eps;
}

std::vector<TransferChainState> evolve_chain(const SpectralWindow& w, std::span<const double> v,
                                             cplx lambda) {
  const auto dd = DiagonalizationData::of(w.E());
  const auto eps = perturbations(w, v, lambda);
  const cplx half_irho(0.0, 0.5 * w.rho());
  std::vector<TransferChainState> out;
  out.reserve(v.size() + 1);
  TransferChainState s;
  s.lambda = lambda;
  s.M = s.Q = s.X = CMat2::identity();
  out.push_back(s);
  for (std::size_t ell = 1; ell <= v.size(); ++ell) {
    const cplx e = eps[ell - 1];
    const CMat2 O = oscillating_matrix(w, ell);
    const CMat2 T{w.E() + e, -1.0, 1.0, 0.0};
    s.ell = ell;
    s.M = T * s.M;
    const CMat2 K = half_irho * (dd.Z * O * dd.Zinv);
    s.Q = s.Q + e * (K * s.Q);
    s.X = s.X + (half_irho * e) * (O * s.X);
    out.push_back(s);
  }
  return out;
}

double sup_trace_statistic(std::span<const std::vector<TransferChainState>> chains) {
  double m = 0.0;
  for (const auto& ch : chains) {
    for (const auto& s : ch) m = std::max(m, trace_mm_star(s.M));
  }
  return m;
}

double sup_trace_statistic(const SpectralWindow& w, std::span<const double> v,
                           std::span<const double> lambda_grid) {
  double m = 2.0;
  const double rn = w.rho() * static_cast<double>(v.size());
  for (double lam : lambda_grid) {
    // Real transfer product only; avoids storing the chain.
    double a = 1.0, b = 0.0, c = 0.0, d = 1.0;
    for (double vl : v) {
      const double x = w.E() + lam / rn - vl;
      const double na = x * a - c, nb = x * b - d;
      c = a;
      d = b;
      a = na;
      b = nb;
      m = std::max(m, a * a + b * b + c * c + d * d);
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Discrete phase.

DiscretePhaseState initial_discrete_phase() {
  return DiscretePhaseState{0, cplx(-1.0, 0.0), std::numbers::pi};
}

namespace {

constexpr double kMinDenominator = 1e-12;
constexpr double kMaxIncrement = std::numbers::pi / 2.0;

double lift_increment(cplx from, cplx to, std::size_t ell) {
  const double inc = std::arg(to * std::conj(from));
  if (!(std::abs(inc) < kMaxIncrement)) {
    throw NumericalError("discrete phase increment too large at step " + std::to_string(ell));
  }
  return inc;
}

cplx mobius_forward(cplx xi, cplx c, std::size_t ell, double eps) {
  const cplx den = 1.0 - c - c * xi;
  if (std::abs(den) < kMinDenominator) {
    throw NumericalError("discrete phase denominator vanishes at step " + std::to_string(ell) +
                         " (eps=" + std::to_string(eps) + ")");
  }
  return (xi * (1.0 + c) + c) / den;
}

cplx mobius_inverse(cplx eta, cplx c, std::size_t ell, double eps) {
  const cplx den = 1.0 + c + c * eta;
  if (std::abs(den) < kMinDenominator) {
    throw NumericalError("inverse phase denominator vanishes at step " + std::to_string(ell) +
                         " (eps=" + std::to_string(eps) + ")");
  }
  return (eta * (1.0 - c) - c) / den;
}

}  // namespace

DiscretePhaseState discrete_phase_step(const DiscretePhaseState& state, const SpectralWindow& w,
                                       double eps_ell) {
  const std::size_t ell = state.ell + 1;
  const cplx p = z_pow_2l(w, ell);
  const cplx c(0.0, 0.5 * w.rho() * eps_ell);
  cplx nu = p * mobius_forward(std::conj(p) * state.unit, c, ell, eps_ell);
  nu /= std::abs(nu);
  DiscretePhaseState out;
  out.ell = ell;
  out.unit = nu;
  out.lifted = state.lifted + lift_increment(state.unit, nu, ell);
  return out;
}

std::vector<double> forward_phases(const SpectralWindow& w, std::span<const double> v,
                                   double lambda) {
  const double rn = w.rho() * static_cast<double>(v.size());
  std::vector<double> out;
  out.reserve(v.size() + 1);
  DiscretePhaseState s = initial_discrete_phase();
  out.push_back(s.lifted);
  for (double vl : v) {
    s = discrete_phase_step(s, w, lambda / rn - vl);
    out.push_back(s.lifted);
  }
  return out;
}

std::vector<double> backward_phases(const SpectralWindow& w, std::span<const double> v,
                                    double lambda) {
  const std::size_t n = v.size();
  const double rn = w.rho() * static_cast<double>(n);
  const double theta = std::arg(w.z());
  // -z^{2n+2}, lifted to its principal argument.
  const double a0 = std::remainder((2.0 * static_cast<double>(n) + 2.0) * theta +
                                       std::numbers::pi,
                                   2.0 * std::numbers::pi);
  cplx u = std::polar(1.0, a0);
  double lifted = a0;
  std::vector<double> out;
  out.reserve(n + 1);
  out.push_back(lifted);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t ell = n - k;
    const double eps = lambda / rn - v[ell - 1];
    const cplx p = z_pow_2l(w, ell);
    const cplx c(0.0, 0.5 * w.rho() * eps);
    cplx nu = p * mobius_inverse(std::conj(p) * u, c, ell, eps);
    nu /= std::abs(nu);
    lifted += lift_increment(u, nu, ell);
    u = nu;
    out.push_back(lifted);
  }
  return out;
}

namespace {
// #(2 pi Z intersected with [a, b)).
long lattice_points_half_open(double a, double b) {
  const double tp = 2.0 * std::numbers::pi;
  return static_cast<long>(std::ceil(b / tp)) - static_cast<long>(std::ceil(a / tp));
}
}  // namespace

long oscillation_count(const SpectralWindow& w, std::span<const double> v, double lambda1,
                       double lambda2, std::size_t split) {
  if (!(lambda1 <= lambda2)) throw std::invalid_argument("oscillation_count needs lambda1 <= lambda2");
  if (lambda1 == lambda2) return 0;
  const std::size_t n = v.size();
  if (split > n) throw std::invalid_argument("split index exceeds n");
  auto endpoint = [&](double lam) {
    return forward_phases(w, v, lam)[n - split] - backward_phases(w, v, lam)[split];
  };
  return lattice_points_half_open(endpoint(lambda1), endpoint(lambda2));
}

ScaledValue secular_value(const SpectralWindow& w, std::span<const double> v, double lambda) {
  // psi_{l+1} = (E + eps_l) psi_l - psi_{l-1}, psi_0 = 0, psi_1 = 1; returns psi_{n+1}.
  const double rn = w.rho() * static_cast<double>(v.size());
  const double mu = w.E() + lambda / rn;
  double prev = 0.0, cur = 1.0;
  long ex = 0;
  for (double vl : v) {
    const double next = (mu - vl) * cur - prev;
    prev = cur;
    cur = next;
    const double m = std::max(std::abs(cur), std::abs(prev));
    if (m > 0x1.0p+500 || (m < 0x1.0p-500 && m > 0.0)) {
      int e;
      std::frexp(m, &e);
      cur = std::ldexp(cur, -e);
      prev = std::ldexp(prev, -e);
      ex += e;
    }
  }
  return {cur, ex};
}

int secular_sign(const SpectralWindow& w, std::span<const double> v, double lambda) {
  const double m = secular_value(w, v, lambda).mantissa;
  return (m > 0.0) - (m < 0.0);
}

namespace {

// A grid cell [a, b] with a sign change, or an exact grid zero (a == b).
struct Bracket {
  double a, b;
};

std::vector<Bracket> sign_change_brackets(const SpectralWindow& w, std::span<const double> v,
                                          double lo, double hi, double h) {
  const auto cells = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((hi - lo) / h)));
  const double step = (hi - lo) / static_cast<double>(cells);
  std::vector<Bracket> out;
  int s_prev = secular_sign(w, v, lo);
  double x_prev = lo;
  if (s_prev == 0) out.push_back({lo, lo});
  for (std::size_t i = 1; i <= cells; ++i) {
    const double x = i == cells ? hi : lo + step * static_cast<double>(i);
    const int s = secular_sign(w, v, x);
    if (s == 0) {
      out.push_back({x, x});
    } else if (s_prev != 0 && s != s_prev) {
      out.push_back({x_prev, x});
    }
    if (s != 0) {
      s_prev = s;
      x_prev = x;
    }
  }
  return out;
}

double min_separation(const std::vector<Bracket>& br) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < br.size(); ++i) {
    m = std::min(m, 0.5 * (br[i].a + br[i].b) - 0.5 * (br[i - 1].a + br[i - 1].b));
  }
  return m;
}

}  // namespace

std::vector<double> secular_roots(const SpectralWindow& w, std::span<const double> v, double lo,
                                  double hi, double tol, int max_refinements) {
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  if (!(lo < hi)) return {};
  // Four grid cells per mean eigenvalue spacing (2 pi) to start; halve until
  // the count is stable across a halving and roots sit well apart.
  double h = std::numbers::pi / 2.0;
  auto br = sign_change_brackets(w, v, lo, hi, h);
  bool resolved = false;
  for (int r = 0; r < max_refinements; ++r) {
    h /= 2.0;
    auto br2 = sign_change_brackets(w, v, lo, hi, h);
    const bool stable = br2.size() == br.size();
    br = std::move(br2);
    if (stable && min_separation(br) > 4.0 * h) {
      resolved = true;
      break;
    }
  }
  if (!resolved) {
    throw NumericalError("secular_roots: sign changes unresolved within refinement budget");
  }

  std::vector<double> roots;
  roots.reserve(br.size());
  for (auto [a, b] : br) {
    if (a < b) {
      const int sa = secular_sign(w, v, a);
      while (b - a > tol) {
        const double m = 0.5 * (a + b);
        if (m <= a || m >= b) break;
        const int sm = secular_sign(w, v, m);
        if (sm == 0) {
          a = b = m;
          break;
        }
        (sm == sa ? a : b) = m;
      }
    }
    roots.push_back(0.5 * (a + b));
  }
  return roots;
}

}  // namespace schrolab
