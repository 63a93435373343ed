#include "schrolab/operator_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace schrolab {

PotentialModel parse_potential_model(std::string_view name) {
  if (name == "critical") return PotentialModel::critical;
  if (name == "decaying") return PotentialModel::decaying;
  throw std::invalid_argument("unknown potential model: " + std::string(name));
}

std::string_view to_string(PotentialModel m) {
  return m == PotentialModel::critical ? "critical" : "decaying";
}

double density_rho(double E) {
  if (!(std::abs(E) < 2.0)) throw std::domain_error("energy must satisfy |E| < 2");
  return 1.0 / std::sqrt(1.0 - E * E / 4.0);
}

SpectralWindow::SpectralWindow(double E, double R) : E_(E), R_(R), rho_(density_rho(E)) {
  if (!(R >= 0.0)) throw std::invalid_argument("window radius must be non-negative");
  z_ = {E / 2.0, std::sqrt(1.0 - E * E / 4.0)};
}

double SpectralWindow::to_energy(double lambda, std::size_t n) const noexcept {
  return E_ + lambda / (rho_ * static_cast<double>(n));
}

double SpectralWindow::to_rescaled(double mu, std::size_t n) const noexcept {
  return rho_ * static_cast<double>(n) * (mu - E_);
}

std::vector<double> potential_values(const PotentialSpec& spec, SeedSpec seed) {
  if (spec.n == 0) throw std::invalid_argument("matrix size n must be at least 1");
  if (!(spec.sigma >= 0.0)) throw std::invalid_argument("sigma must be non-negative");
  std::vector<double> v = sample_omega(spec.omega, seed, spec.n);
  const double n = static_cast<double>(spec.n);
  if (spec.model == PotentialModel::critical) {
    const double s = spec.sigma / std::sqrt(n);
    for (double& x : v) x *= s;
  } else {
    // v_k = sigma omega_k / sqrt(n + 1 - k), k = 1..n.
    for (std::size_t i = 0; i < spec.n; ++i) {
      v[i] *= spec.sigma / std::sqrt(n - static_cast<double>(i));
    }
  }
  return v;
}

Hamiltonian build_hamiltonian(const PotentialSpec& spec, SeedSpec seed) {
  return Hamiltonian{potential_values(spec, seed)};
}

namespace {
constexpr double kPivMin = 1e-290;
}

std::size_t sturm_count(const Hamiltonian& H, double mu) {
  std::size_t neg = 0;
  double d = 1.0;
  bool first = true;
  for (double v : H.diagonal) {
    d = first ? v - mu : (v - mu) - 1.0 / d;
    first = false;
    // A vanishing pivot means mu is an eigenvalue; +pivmin keeps it out of
    // the count (strictly below).
    if (std::abs(d) < kPivMin) d = kPivMin;
    if (d < 0.0) ++neg;
  }
  return neg;
}

namespace {

void isolate(const Hamiltonian& H, double lo, double hi, std::size_t clo, std::size_t chi,
             double tol, std::vector<double>& out) {
  if (chi <= clo) return;
  if (hi - lo <= tol) {
    const double mid = 0.5 * (lo + hi);
    for (std::size_t k = clo; k < chi; ++k) out.push_back(mid);
    return;
  }
  const double mid = 0.5 * (lo + hi);
  if (mid <= lo || mid >= hi) {
    for (std::size_t k = clo; k < chi; ++k) out.push_back(mid);
    return;
  }
  const std::size_t cm = sturm_count(H, mid);
  isolate(H, lo, mid, clo, cm, tol, out);
  isolate(H, mid, hi, cm, chi, tol, out);
}

}  // namespace

std::vector<double> eigenvalues_in_interval(const Hamiltonian& H, double a, double b, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  if (b < a) return {};
  const double hi = std::nextafter(b, std::numeric_limits<double>::infinity());
  const std::size_t clo = sturm_count(H, a);
  const std::size_t chi = sturm_count(H, hi);
  std::vector<double> out;
  out.reserve(chi - std::min(chi, clo));
  isolate(H, a, hi, clo, chi, tol, out);
  for (double& x : out) x = std::clamp(x, a, b);
  return out;
}

std::vector<double> eigenvalues_in_window(const Hamiltonian& H, const SpectralWindow& w,
                                          double tol) {
  return eigenvalues_in_interval(H, w.lower(H.size()), w.upper(H.size()), tol);
}

namespace {

// LU with partial pivoting of the tridiagonal H - mu I (LAPACK dgttrf layout).
struct TridiagLU {
  std::vector<double> dl, d, du, du2;
  std::vector<std::size_t> ipiv;
  bool singular = false;

  TridiagLU(const Hamiltonian& H, double mu) {
    const std::size_t n = H.size();
    d.resize(n);
    dl.assign(n > 0 ? n - 1 : 0, 1.0);
    du.assign(n > 0 ? n - 1 : 0, 1.0);
    du2.assign(n > 1 ? n - 2 : 0, 0.0);
    ipiv.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      d[i] = H.diagonal[i] - mu;
      ipiv[i] = i;
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (std::abs(d[i]) >= std::abs(dl[i])) {
        if (d[i] != 0.0) {
          const double f = dl[i] / d[i];
          dl[i] = f;
          d[i + 1] -= f * du[i];
        }
      } else {
        const double f = d[i] / dl[i];
        d[i] = dl[i];
        dl[i] = f;
        const double t = du[i];
        du[i] = d[i + 1];
        d[i + 1] = t - f * d[i + 1];
        if (i + 2 < n) {
          du2[i] = du[i + 1];
          du[i + 1] = -f * du[i + 1];
        }
        ipiv[i] = i + 1;
      }
    }
    for (double x : d) {
      if (x == 0.0) singular = true;
    }
  }

  void solve(std::vector<double>& b) const {
    const std::size_t n = d.size();
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (ipiv[i] == i) {
        b[i + 1] -= dl[i] * b[i];
      } else {
        const double t = b[i];
        b[i] = b[i + 1];
        b[i + 1] = t - dl[i] * b[i];
      }
    }
    for (std::size_t ii = n; ii-- > 0;) {
      double s = b[ii];
      if (ii + 1 < n) s -= du[ii] * b[ii + 1];
      if (ii + 2 < n) s -= du2[ii] * b[ii + 2];
      b[ii] = s / d[ii];
    }
  }
};

double normalize(std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  const double nrm = std::sqrt(s);
  for (double& v : x) v /= nrm;
  return nrm;
}

void fix_sign(std::vector<double>& x) {
  std::size_t arg = 0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (std::abs(x[i]) > std::abs(x[arg])) arg = i;
  }
  if (!x.empty() && x[arg] < 0.0) {
    for (double& v : x) v = -v;
  }
}

}  // namespace

std::vector<double> eigenvector(const Hamiltonian& H, double mu, double tol, int max_iterations) {
  const std::size_t n = H.size();
  if (n == 0) throw std::invalid_argument("empty operator");
  if (n == 1) return {1.0};
  double shift = mu;
  TridiagLU lu(H, shift);
  for (int attempt = 0; lu.singular && attempt < 8; ++attempt) {
    shift += 2.0 * tol * std::max(1.0, std::abs(mu));
    lu = TridiagLU(H, shift);
  }
  if (lu.singular) throw NumericalError("inverse iteration: singular shifted system");

  std::vector<double> x(n);
  VariateStream start(SeedSpec{0x5eedu, n}, purpose::inverse_iteration);
  for (std::size_t i = 0; i < n; ++i) x[i] = 2.0 * start.uniform(i) - 1.0;
  normalize(x);

  std::vector<double> prev;
  for (int it = 0; it < max_iterations; ++it) {
    prev = x;
    lu.solve(x);
    const double growth = normalize(x);
    if (!std::isfinite(growth)) throw NumericalError("inverse iteration: overflow");
    double dot = 0.0;
    for (std::size_t i = 0; i < n; ++i) dot += x[i] * prev[i];
    const double sgn = dot < 0.0 ? -1.0 : 1.0;
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) change = std::max(change, std::abs(x[i] - sgn * prev[i]));
    if (change < 1e-12 && it > 0) {
      fix_sign(x);
      return x;
    }
  }
  throw NumericalError("inverse iteration did not converge for shift " + std::to_string(mu));
}

DelocalizationReport delocalization_from_vector(const std::vector<double>& psi, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("delocalization threshold t must be positive");
  const std::size_t n = psi.size();
  DelocalizationReport r;
  r.min_pair = std::numeric_limits<double>::infinity();
  r.max_pair = 0.0;
  double norm = 0.0;
  for (std::size_t l = 0; l <= n; ++l) {
    const double a = l >= 1 ? psi[l - 1] : 0.0;
    const double b = l < n ? psi[l] : 0.0;
    const double s = a * a + b * b;
    r.min_pair = std::min(r.min_pair, s);
    r.max_pair = std::max(r.max_pair, s);
  }
  for (double v : psi) norm += v * v;
  const double np1 = static_cast<double>(n + 1);
  r.lower_bound = 2.0 / (np1 * t * t);
  r.upper_bound = 2.0 * t * t / np1;
  r.holds = r.lower_bound < r.min_pair && r.max_pair < r.upper_bound;
  r.norm_error = std::abs(norm - 1.0);
  return r;
}

DelocalizationReport eigenvector_delocalization(const Hamiltonian& H, double mu,
                                                const SpectralWindow& w, double t) {
  const std::size_t n = H.size();
  if (mu < w.lower(n) - 1e-9 || mu > w.upper(n) + 1e-9) {
    throw std::invalid_argument("eigenvalue outside the spectral window");
  }
  return delocalization_from_vector(eigenvector(H, mu), t);
}

double boundary_phase(const SpectralWindow& w, std::size_t n) {
  // arg(z^{2n+2}) = (2n+2) theta reduced to (-pi, pi].
  const double theta = std::arg(w.z());
  const double two_pi = 2.0 * std::numbers::pi;
  double a = std::fmod((2.0 * static_cast<double>(n) + 2.0) * theta, two_pi);
  if (a > std::numbers::pi) a -= two_pi;
  if (a <= -std::numbers::pi) a += two_pi;
  // Rounding can land an exact -pi / pi just on the wrong side; snap to pi.
  if (std::abs(std::abs(a) - std::numbers::pi) < 1e-9) a = std::numbers::pi;
  return a;
}

ShiftConvention parse_shift_convention(std::string_view name) {
  if (name == "lattice") return ShiftConvention::lattice;
  if (name == "lattice_plus_pi") return ShiftConvention::lattice_plus_pi;
  throw std::invalid_argument("unknown shift convention: " + std::string(name));
}

std::string_view to_string(ShiftConvention c) {
  return c == ShiftConvention::lattice ? "lattice" : "lattice_plus_pi";
}

ScaledConfiguration rescale_and_shift(const std::vector<double>& eigs, const SpectralWindow& w,
                                      std::size_t n, ShiftConvention conv) {
  ScaledConfiguration c;
  c.n = n;
  c.E = w.E();
  c.shift = boundary_phase(w, n);
  if (conv == ShiftConvention::lattice_plus_pi) c.shift += std::numbers::pi;
  c.raw.reserve(eigs.size());
  c.points.reserve(eigs.size());
  for (double mu : eigs) {
    const double l = w.to_rescaled(mu, n);
    c.raw.push_back(l);
    c.points.push_back(l - c.shift);
  }
  return c;
}

std::size_t aligned_size(const SpectralWindow& w, std::size_t lo, std::size_t hi) {
  if (lo == 0 || hi < lo) throw std::invalid_argument("invalid size range");
  std::size_t best = lo;
  double best_abs = std::abs(boundary_phase(w, lo));
  for (std::size_t n = lo + 1; n <= hi; ++n) {
    const double a = std::abs(boundary_phase(w, n));
    if (a < best_abs - 1e-9) {
      best_abs = a;
      best = n;
    }
  }
  return best;
}

}  // namespace schrolab
