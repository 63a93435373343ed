#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "schrolab/operator_model.hpp"

namespace schrolab {

using cplx = std::complex<double>;

// Row-major 2x2: ((a, b), (c, d)).
template <class T>
struct Mat2 {
  T a{}, b{}, c{}, d{};

  static Mat2 identity() { return {T(1), T(0), T(0), T(1)}; }

  T det() const { return a * d - b * c; }
  T trace() const { return a + d; }

  friend Mat2 operator*(const Mat2& x, const Mat2& y) {
    return {x.a * y.a + x.b * y.c, x.a * y.b + x.b * y.d, x.c * y.a + x.d * y.c,
            x.c * y.b + x.d * y.d};
  }
  friend Mat2 operator+(const Mat2& x, const Mat2& y) {
    return {x.a + y.a, x.b + y.b, x.c + y.c, x.d + y.d};
  }
  friend Mat2 operator-(const Mat2& x, const Mat2& y) {
    return {x.a - y.a, x.b - y.b, x.c - y.c, x.d - y.d};
  }
  template <class S>
  friend Mat2 operator*(S s, const Mat2& x) {
    return {T(s) * x.a, T(s) * x.b, T(s) * x.c, T(s) * x.d};
  }
};

using RMat2 = Mat2<double>;
using CMat2 = Mat2<cplx>;

CMat2 to_complex(const RMat2& m);
double max_abs_diff(const CMat2& x, const CMat2& y);
// Tr(M M*), the squared Frobenius norm.
double trace_mm_star(const CMat2& m);

RMat2 transfer_matrix(double x);

// T(E) = Z D Zinv with z on the upper unit half circle.
struct DiagonalizationData {
  double E = 0.0;
  cplx z;
  CMat2 Z, D, Zinv;

  static DiagonalizationData of(double E);
};

// O_l = ((1, z^{2l}), (-conj(z)^{2l}, -1)).
CMat2 oscillating_matrix(const SpectralWindow& w, std::size_t ell);

struct TransferChainState {
  std::size_t ell = 0;
  cplx lambda;
  CMat2 M, Q, X;
};

// Perturbations eps_l = lambda/(rho n) - v_l, l = 1..n.
std::vector<cplx> perturbations(const SpectralWindow& w, std::span<const double> v, cplx lambda);

// States for l = 0..n. Q follows the conjugated rank-one update and X the
// diagonalized recursion; M is the plain transfer product.
std::vector<TransferChainState> evolve_chain(const SpectralWindow& w, std::span<const double> v,
                                             cplx lambda);

// max over l and chains of Tr(M_l M_l*).
double sup_trace_statistic(std::span<const std::vector<TransferChainState>> chains);
double sup_trace_statistic(const SpectralWindow& w, std::span<const double> v,
                           std::span<const double> lambda_grid);

struct DiscretePhaseState {
  std::size_t ell = 0;
  cplx unit{-1.0, 0.0};
  double lifted = 0.0;
};

// The forward phase starts at e^{i phi_0} = -1 (first-column ratio of Zinv).
DiscretePhaseState initial_discrete_phase();

// Applies the Mobius step with index state.ell + 1. Throws NumericalError on
// a vanishing denominator or an increment of modulus >= pi/2.
DiscretePhaseState discrete_phase_step(const DiscretePhaseState& state, const SpectralWindow& w,
                                       double eps_ell);

// Lifted phases phi_0..phi_n for real lambda.
std::vector<double> forward_phases(const SpectralWindow& w, std::span<const double> v,
                                   double lambda);
// Lifted backward phases phi~_0..phi~_n, e^{i phi~_0} = -z^{2n+2}.
std::vector<double> backward_phases(const SpectralWindow& w, std::span<const double> v,
                                    double lambda);

// Number of rescaled eigenvalues in [lambda1, lambda2): lattice points 2 pi Z
// in [a1, a2) where a = phi_{n-k} - phi~_k.
long oscillation_count(const SpectralWindow& w, std::span<const double> v, double lambda1,
                       double lambda2, std::size_t split = 0);

// Sign of (M_n^lambda)_{11}, the characteristic polynomial det(mu - H) at
// mu = E + lambda/(rho n); 0 only on exact underflow-free zero.
int secular_sign(const SpectralWindow& w, std::span<const double> v, double lambda);

// (M_n^lambda)_{11} as mantissa * 2^exponent, to stay finite for large n.
struct ScaledValue {
  double mantissa = 0.0;
  long exponent = 0;
};
ScaledValue secular_value(const SpectralWindow& w, std::span<const double> v, double lambda);

// Zeros of lambda -> (M_n^lambda)_{11} in [lo, hi], bisected to tol.
std::vector<double> secular_roots(const SpectralWindow& w, std::span<const double> v, double lo,
                                  double hi, double tol, int max_refinements = 20);

}  // namespace schrolab
