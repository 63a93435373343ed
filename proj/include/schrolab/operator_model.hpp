#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "schrolab/randomness.hpp"

namespace schrolab {

// Raised when an iterative numerical method fails within its budget.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class PotentialModel { critical, decaying };

PotentialModel parse_potential_model(std::string_view name);
std::string_view to_string(PotentialModel m);

struct PotentialSpec {
  PotentialModel model = PotentialModel::critical;
  double sigma = 1.0;
  OmegaKind omega = OmegaKind::gaussian;
  std::size_t n = 0;
};

// Symmetric tridiagonal with unit off-diagonal; only the diagonal is stored.
struct Hamiltonian {
  std::vector<double> diagonal;

  std::size_t size() const noexcept { return diagonal.size(); }
};

double density_rho(double E);

// Energy E in the open band (-2, 2) and a window of half-width R in rescaled
// units lambda = rho * n * (mu - E).
class SpectralWindow {
 public:
  SpectralWindow(double E, double R);

  double E() const noexcept { return E_; }
  double R() const noexcept { return R_; }
  double rho() const noexcept { return rho_; }
  std::complex<double> z() const noexcept { return z_; }
  double tau_for(double sigma) const noexcept { return sigma * sigma * rho_ * rho_; }

  double to_energy(double lambda, std::size_t n) const noexcept;
  double to_rescaled(double mu, std::size_t n) const noexcept;

  // Closed energy interval [E - R/(rho n), E + R/(rho n)].
  double lower(std::size_t n) const noexcept { return to_energy(-R_, n); }
  double upper(std::size_t n) const noexcept { return to_energy(R_, n); }

 private:
  double E_, R_, rho_;
  std::complex<double> z_;
};

std::vector<double> potential_values(const PotentialSpec& spec, SeedSpec seed);
Hamiltonian build_hamiltonian(const PotentialSpec& spec, SeedSpec seed);

// Number of eigenvalues strictly below mu.
std::size_t sturm_count(const Hamiltonian& H, double mu);

// All eigenvalues in the closed interval [a, b], each to within tol, ascending.
std::vector<double> eigenvalues_in_interval(const Hamiltonian& H, double a, double b, double tol);
std::vector<double> eigenvalues_in_window(const Hamiltonian& H, const SpectralWindow& w,
                                          double tol);

// Unit eigenvector by inverse iteration with the shift mu; sign fixed so the
// largest-magnitude entry is positive. Throws NumericalError on failure.
std::vector<double> eigenvector(const Hamiltonian& H, double mu, double tol = 1e-10,
                                int max_iterations = 50);

struct DelocalizationReport {
  double min_pair = 0.0;  // min over l = 0..n of |psi_l|^2 + |psi_{l+1}|^2, psi_0 = psi_{n+1} = 0
  double max_pair = 0.0;
  double lower_bound = 0.0;  // 2 / ((n+1) t^2)
  double upper_bound = 0.0;  // 2 t^2 / (n+1)
  bool holds = false;
  double norm_error = 0.0;   // |sum psi^2 - 1|
};

DelocalizationReport delocalization_from_vector(const std::vector<double>& psi, double t);
DelocalizationReport eigenvector_delocalization(const Hamiltonian& H, double mu,
                                                const SpectralWindow& w, double t);

struct ScaledConfiguration {
  std::vector<double> raw;     // rho n (mu_k - E)
  std::vector<double> points;  // raw - shift
  double shift = 0.0;
  std::size_t n = 0;
  double E = 0.0;
};

// Principal value in (-pi, pi] of arg(z^{2n+2}).
double boundary_phase(const SpectralWindow& w, std::size_t n);

// Offset subtracted from the rescaled eigenvalues. lattice: the principal
// arg(z^{2n+2}), which puts the free (sigma = 0) spectrum on 2 pi Z + O(1/n).
// lattice_plus_pi: the same plus pi, kept for comparison.
enum class ShiftConvention { lattice, lattice_plus_pi };

ShiftConvention parse_shift_convention(std::string_view name);
std::string_view to_string(ShiftConvention c);

ScaledConfiguration rescale_and_shift(const std::vector<double>& eigs, const SpectralWindow& w,
                                      std::size_t n,
                                      ShiftConvention conv = ShiftConvention::lattice);

// The size in [lo, hi] whose boundary phase is closest to zero (smallest such
// n on ties).
std::size_t aligned_size(const SpectralWindow& w, std::size_t lo, std::size_t hi);

}  // namespace schrolab
