#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "schrolab/operator_model.hpp"
#include "schrolab/randomness.hpp"
#include "schrolab/sde.hpp"
#include "schrolab/stats.hpp"
#include "schrolab/transfer.hpp"

using namespace schrolab;
using std::numbers::pi;

namespace {

NoiseTape tape(std::uint64_t seed, double dt, std::size_t steps,
               ChannelSet cs = ChannelSet::all()) {
  return NoiseTape::make(SeedSpec{seed, 0}, dt, steps, cs);
}

std::vector<double> copy(const NoiseTape& t, Channel c, double sign = 1.0) {
  std::vector<double> v(t.channel(c).begin(), t.channel(c).end());
  for (double& x : v) x *= sign;
  return v;
}

// Same Brownian motions with W replaced by i W: (B2, B3) -> (-B3, B2).
NoiseTape rotated(const NoiseTape& t) {
  std::vector<std::pair<Channel, std::vector<double>>> inc{{Channel::B, copy(t, Channel::B)},
                                                           {Channel::B2, copy(t, Channel::B3, -1)},
                                                           {Channel::B3, copy(t, Channel::B2)}};
  return NoiseTape::from_increments(t.dt(), inc);
}

NoiseTape flipped_b2(const NoiseTape& t) {
  std::vector<std::pair<Channel, std::vector<double>>> inc{{Channel::B1, copy(t, Channel::B1)},
                                                           {Channel::B2, copy(t, Channel::B2, -1)}};
  return NoiseTape::from_increments(t.dt(), inc);
}

}  // namespace

TEST(PhaseFamily, ZeroTapeIsPureDrift) {
  auto z = NoiseTape::zero(1e-3, 1000, ChannelSet::all());
  const std::vector<double> grid{-2.0, 0.0, 1.5, 7.0};
  for (PhaseKind k : {PhaseKind::critical, PhaseKind::decaying}) {
    const double h = k == PhaseKind::decaying ? 0.9 : 1.0;
    auto f = integrate_phase_family(k, grid, h, z);
    for (std::size_t j = 0; j < grid.size(); ++j) {
      EXPECT_NEAR(f.final_values()[j], grid[j] * h, 1e-12);
    }
  }
  // E = 0 with lambda = 0 sits at the fixed point phi = 0 of the drift.
  std::vector<double> zero{0.0};
  EXPECT_EQ(integrate_phase_family(PhaseKind::critical_e0, zero, 1.0, z).final_values()[0], 0.0);
}

TEST(PhaseFamily, RecordsRequestedTimes) {
  auto t = tape(1, 1e-2, 100);
  PhaseOptions o;
  o.record_every = 10;
  const std::vector<double> grid{0.0, 1.0};
  auto f = integrate_phase_family(PhaseKind::critical, grid, 1.0, t, o);
  ASSERT_EQ(f.times.size(), 11u);
  EXPECT_NEAR(f.times[3], 0.3, 1e-12);
  EXPECT_EQ(f.values[0][1], 0.0);
  std::vector<double> fin(2);
  phase_final(PhaseKind::critical, grid, 1.0, t, fin);
  EXPECT_EQ(fin[0], f.final_values()[0]);
  EXPECT_EQ(fin[1], f.final_values()[1]);
}

TEST(PhaseFamily, Rejects) {
  auto t = tape(1, 1e-2, 100);
  const std::vector<double> grid{0.0};
  const std::vector<double> unsorted{1.0, 0.0};
  EXPECT_THROW(integrate_phase_family(PhaseKind::decaying, grid, 1.0, t), std::invalid_argument);
  EXPECT_THROW(integrate_phase_family(PhaseKind::critical, grid, 1.005, t), std::invalid_argument);
  EXPECT_THROW(integrate_phase_family(PhaseKind::critical, grid, 2.0, t), std::invalid_argument);
  EXPECT_THROW(integrate_phase_family(PhaseKind::critical, unsorted, 1.0, t),
               std::invalid_argument);
  EXPECT_THROW(parse_phase_kind("fast"), std::invalid_argument);
}

TEST(PhaseFamily, StrictlyIncreasingInLambda) {
  const std::vector<double> grid{0.0, 1.0, 2.0};
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto f = integrate_phase_family(PhaseKind::critical, grid, 1.0, tape(100 + s, 1e-4, 10000));
    EXPECT_LT(f.final_values()[0], f.final_values()[1]);
    EXPECT_LT(f.final_values()[1], f.final_values()[2]);
    EXPECT_EQ(f.refinements, 0);
  }
}

TEST(PhaseFamily, FixedLambdaMarginal) {
  const std::size_t N = 3000;
  std::vector<double> x(N);
  const std::vector<double> grid{3.0};
  for (std::size_t i = 0; i < N; ++i) {
    std::vector<double> out(1);
    phase_final(PhaseKind::critical, grid, 1.0, tape(5000 + i, 1e-3, 1000, ChannelSet::critical()),
                out);
    x[i] = out[0];
  }
  EXPECT_LT(std::abs(stats::mean(x) - 3.0), 3.0 * stats::stderr_mean(x));
  EXPECT_LT(std::abs(stats::variance(x) - 1.5), 3.0 * stats::stderr_variance(x));
}

// The phase read off the matrix SDE solves the phase SDE driven by the same
// Brownian motions, with W rotated by i.
TEST(PhaseFamily, MatchesMatrixPhasePathwise) {
  const double dt = 1e-4;
  for (std::uint64_t s = 0; s < 5; ++s) {
    auto t = tape(300 + s, dt, 10000, ChannelSet::critical());
    MatrixOptions mo;
    mo.record_every = 1;
    auto m = integrate_matrix(MatrixKind::generic, 2.5, MatrixInit::identity, 1.0, t, mo);
    auto from_x = phase_from_matrix(m);
    const std::vector<double> grid{2.5};
    std::vector<double> out(1);
    phase_final(PhaseKind::critical, grid, 1.0, rotated(t), out);
    EXPECT_LT(std::abs(out[0] - from_x.back()), 10.0 * std::sqrt(dt));
  }
}

TEST(PhaseFamily, E0DriftConsistentWithMatrix) {
  const double dt = 1e-4;
  double stated_gap = 0.0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    auto t = tape(400 + s, dt, 10000);
    MatrixOptions mo;
    mo.record_every = 1;
    auto m = integrate_matrix(MatrixKind::e0, 1.0, MatrixInit::identity, 1.0, t, mo);
    const double ref = phase_from_matrix(m).back();
    const std::vector<double> grid{1.0};
    std::vector<double> a(1), b(1);
    // The matrix phase sees -B2 in place of B2.
    auto f = flipped_b2(t);
    phase_final(PhaseKind::critical_e0, grid, 1.0, f, a);
    PhaseOptions so;
    so.e0_drift = E0Drift::stated;
    phase_final(PhaseKind::critical_e0, grid, 1.0, f, b, so);
    EXPECT_LT(std::abs(a[0] - ref), 10.0 * std::sqrt(dt));
    stated_gap = std::max(stated_gap, std::abs(b[0] - ref));
  }
  EXPECT_GT(stated_gap, 10.0 * std::sqrt(dt));
}

TEST(Matrix, ZeroTapeDiagonalFlow) {
  auto z = NoiseTape::zero(1e-4, 10000, ChannelSet::all());
  for (MatrixKind k : {MatrixKind::generic, MatrixKind::e0}) {
    auto m = integrate_matrix(k, 3.0, MatrixInit::zinv, 1.0, z);
    const auto X0 = DiagonalizationData::of(1.0).Zinv;
    const cplx e = std::polar(1.0, 1.5);
    const CMat2 expect{e * X0.a, e * X0.b, std::conj(e) * X0.c, std::conj(e) * X0.d};
    EXPECT_LT(max_abs_diff(m.X.back(), expect), 10.0 * 1e-4);
  }
}

TEST(Matrix, DeterminantDriftShrinksWithDt) {
  const std::size_t N = 300;
  std::vector<double> coarse(N), fine(N);
  for (std::size_t i = 0; i < N; ++i) {
    auto t = tape(700 + i, 5e-4, 2000, ChannelSet::critical());
    auto c = t.coarsened();
    auto a = integrate_matrix(MatrixKind::generic, 2.0, MatrixInit::identity, 1.0, c);
    auto b = integrate_matrix(MatrixKind::generic, 2.0, MatrixInit::identity, 1.0, t);
    coarse[i] = std::abs(a.X.back().det() - 1.0);
    fine[i] = std::abs(b.X.back().det() - 1.0);
  }
  std::nth_element(coarse.begin(), coarse.begin() + N / 2, coarse.end());
  std::nth_element(fine.begin(), fine.begin() + N / 2, fine.end());
  EXPECT_GT(coarse[N / 2] / fine[N / 2], 1.3);
}

TEST(Matrix, ZinvInvariantApproximatelyConserved) {
  const double E = 1.0, rho = density_rho(E);
  for (std::uint64_t s = 0; s < 10; ++s) {
    auto t = tape(800 + s, 1e-4, 10000, ChannelSet::critical());
    auto m = integrate_matrix(MatrixKind::generic, 4.0, MatrixInit::zinv, 1.0, t);
    const auto& X = m.X.back();
    EXPECT_NEAR(std::imag(X.a * std::conj(X.b)), rho / 4.0, 0.05 * rho);
    EXPECT_NEAR(std::imag(m.X.front().a * std::conj(m.X.front().b)), rho / 4.0, 1e-14);
  }
}

TEST(Matrix, DecayingRequiresHorizonBelowOne) {
  auto t = tape(1, 1e-2, 100);
  EXPECT_THROW(integrate_matrix(MatrixKind::decaying, 1.0, MatrixInit::identity, 1.0, t),
               std::invalid_argument);
  EXPECT_NO_THROW(integrate_matrix(MatrixKind::decaying, 1.0, MatrixInit::identity, 0.5, t));
}

// Discrete Q_n at lambda against Z X(tau) Zinv at lambda / tau, tau = (sigma rho)^2.
TEST(Matrix, DiscreteChainMatchesContinuumLaw) {
  const double E = 1.0, lambda = 3.0;
  const std::size_t n = 1500, N = 800;
  SpectralWindow w(E, 0.0);
  const double tau = w.tau_for(1.0);
  std::vector<double> d11, c11, d12, c12;
  for (std::size_t i = 0; i < N; ++i) {
    auto v = potential_values(PotentialSpec{PotentialModel::critical, 1.0, OmegaKind::gaussian, n},
                              SeedSpec{900, i});
    const auto Q = evolve_chain(w, v, lambda).back().Q;
    d11.push_back(std::real(Q.a));
    d12.push_back(std::abs(Q.b));
    const double dt = tau / 1000.0;
    auto t = NoiseTape::make(SeedSpec{901, i}, dt, 1000, ChannelSet::critical());
    const auto X = integrate_matrix(MatrixKind::generic, lambda / tau, MatrixInit::identity, tau, t)
                       .X.back();
    const auto Qc = conjugate_to_q(X, E);
    c11.push_back(std::real(Qc.a));
    c12.push_back(std::abs(Qc.b));
  }
  EXPECT_GT(stats::ks_two_sample(d11, c11).p_value, 1e-3);
  EXPECT_GT(stats::ks_two_sample(d12, c12).p_value, 1e-3);
}

TEST(Relative, ZeroLambdaStaysZero) {
  const std::vector<double> grid{0.0, 1.0};
  auto t = tape(12, 1e-3, 5000);
  for (RelativeKind k : {RelativeKind::critical, RelativeKind::sine_beta}) {
    auto p = integrate_relative_family(k, grid, 5.0, t, {2.0, 1.0, 1});
    for (const auto& row : p.values) EXPECT_EQ(row[0], 0.0);
  }
  auto d = integrate_relative_family(RelativeKind::decaying, grid, 0.99, t, {2.0, 1.0, 1});
  for (const auto& row : d.values) EXPECT_EQ(row[0], 0.0);
}

TEST(Relative, SineBetaTerminalIsLatticeValued) {
  const double beta = 2.0;
  std::vector<double> grid;
  for (int k = 0; k <= 5; ++k) grid.push_back(2.0 * pi * k);
  const double tmax = sine_beta_tmax(beta, grid.back());
  const double dt = 1e-3;
  const auto steps = static_cast<std::size_t>(std::ceil(tmax / dt));
  for (std::uint64_t s = 0; s < 10; ++s) {
    auto t = tape(1300 + s, dt, steps, {Channel::B1, Channel::B2});
    RelativeOptions o;
    o.beta = beta;
    auto p = integrate_relative_family(RelativeKind::sine_beta, grid, double(steps) * dt, t, o);
    long prev = 0;
    for (double a : p.final_values()) {
      const double x = a / (2.0 * pi);
      EXPECT_LT(std::abs(x - std::round(x)), 0.05);
      EXPECT_GE(std::lround(x), prev);
      prev = std::lround(x);
    }
  }
}

TEST(Relative, DecayingTimeChangeMatchesSineBeta) {
  const double beta = 2.0, delta = 1e-3, ds = 1e-4;
  const double sigma_rho = std::sqrt(8.0 / beta);
  const auto steps = static_cast<std::size_t>(std::floor(-4.0 / beta * std::log(delta) / ds));
  const std::vector<double> grid{0.0, 3.0, 10.0};
  for (std::uint64_t s = 0; s < 5; ++s) {
    auto t = tape(1400 + s, ds, steps, {Channel::B1, Channel::B2});
    auto a = integrate_decaying_warped(grid, beta, sigma_rho, delta, t);
    RelativeOptions o;
    o.beta = beta;
    auto b = integrate_relative_family(RelativeKind::sine_beta, grid, double(steps) * ds, t, o);
    for (std::size_t j = 0; j < grid.size(); ++j) {
      EXPECT_LT(std::abs(a.final_values()[j] - b.final_values()[j]), 10.0 * std::sqrt(ds));
    }
  }
}

TEST(Derivative, ZeroTape) {
  auto z = NoiseTape::zero(1e-3, 2000, ChannelSet::all());
  auto p = integrate_derivative(2.0, 2.0, z, true);
  EXPECT_NEAR(p.varpi.back(), 2.0, 1e-12);
  EXPECT_NEAR(p.phi.back(), 4.0, 1e-12);
  EXPECT_EQ(p.phi2.back(), 0.0);
  EXPECT_NEAR(sample_derivative_functional(2.0, z), 4.0 * (1.0 - std::exp(-0.5)), 1e-6);
}

TEST(Derivative, MeanPositivityAndFunctionalLaw) {
  const std::size_t N = 2000;
  std::vector<double> w(N), f(N);
  for (std::size_t i = 0; i < N; ++i) {
    auto p = integrate_derivative(1.0, 1.0, tape(2000 + i, 1e-3, 1000), false, 1);
    for (std::size_t k = 1; k < p.varpi.size(); ++k) ASSERT_GT(p.varpi[k], 0.0);
    w[i] = p.varpi.back();
    f[i] = sample_derivative_functional(1.0, tape(90000 + i, 1e-3, 1000));
    ASSERT_GT(f[i], 0.0);
  }
  EXPECT_LT(std::abs(stats::mean(w) - 1.0), 3.0 * stats::stderr_mean(w));
  EXPECT_GT(stats::ks_two_sample(w, f).p_value, 1e-2);
}

// Finite difference of the phase in lambda on a fixed tape tracks varpi.
TEST(Derivative, MatchesFiniteDifference) {
  auto t = tape(77, 1e-4, 10000);
  const double h = 1e-5;
  const std::vector<double> grid{2.0 - h, 2.0 + h};
  std::vector<double> out(2);
  phase_final(PhaseKind::critical, grid, 1.0, t, out);
  auto p = integrate_derivative(2.0, 1.0, t);
  EXPECT_NEAR((out[1] - out[0]) / (2 * h), p.varpi.back(), 1e-4 * (1.0 + p.varpi.back()));
}

TEST(Logtan, FixedPointAtZero) {
  auto z = NoiseTape::zero(1e-3, 1000, {Channel::B});
  auto p = integrate_logtan(0.0, 1.0, z, 0.0);
  EXPECT_EQ(p.Y.back(), 0.0);
  EXPECT_FALSE(p.exploded);
}

// With no noise the composed flow equals alpha += lambda dt plus the tanh drift;
// from Y0 = -30 the cosh part alone reaches log tan(lambda dt / 4) in one step.
TEST(Logtan, ExactCoshFlowFromDeepStart) {
  auto z = NoiseTape::zero(1e-4, 1, {Channel::B});
  auto p = integrate_logtan(0.05e-4, 1e-4, z, -30.0);
  const double expect = std::log(std::tan(0.05 * 1e-4 / 4.0));
  EXPECT_NEAR(p.Y.back(), expect + 0.25 * std::tanh(expect) * 1e-4, 1e-6);
}

TEST(Logtan, MonotoneInInitialValue) {
  for (std::uint64_t s = 0; s < 100; ++s) {
    auto t = tape(3000 + s, 1e-3, 1000, {Channel::B});
    auto lo = integrate_logtan(0.5, 1.0, t, -5.0, 50.0, 1);
    auto hi = integrate_logtan(0.5, 1.0, t, -4.0, 50.0, 1);
    const std::size_t m = std::min(lo.Y.size(), hi.Y.size());
    for (std::size_t k = 0; k < m; ++k) ASSERT_LE(lo.Y[k], hi.Y[k]);
    if (lo.exploded) EXPECT_TRUE(hi.exploded && hi.stop_step <= lo.stop_step);
  }
}

TEST(Logtan, ExplosionBelowBound) {
  const std::size_t N = 20000;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < N; ++i) {
    hits += integrate_logtan(0.05, 1.0, tape(4000 + i, 1e-3, 1000, {Channel::B}), -30.0).exploded;
  }
  const double bound = 4.0 * std::exp(-std::pow(std::log(1.0 / 0.05) - 1.0, 2));
  EXPECT_LT(double(hits) / N, bound);
}

TEST(Carousel, ZeroTape) {
  auto z = NoiseTape::zero(1e-3, 1000, ChannelSet::all());
  const std::vector<double> grid{0.0, 2.0, 5.0};
  auto c = integrate_carousel(grid, 1.0, z);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    EXPECT_NEAR(c.gamma.back()[j], grid[j], 1e-12);
  }
  EXPECT_EQ(c.V.back(), cplx(0.0, 0.0));
  EXPECT_NEAR(carousel_angle(0.0, 1.3), 1.3, 1e-15);
}

TEST(Carousel, MonotoneAndConsistent) {
  const std::vector<double> grid{0.0, 1.0, 3.0, 10.0};
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto t = tape(5000 + s, 1e-4, 10000);
    auto c = integrate_carousel(grid, 1.0, t, 1);
    for (std::size_t k = 1; k < c.times.size(); ++k) {
      const double r = std::abs(c.V[k]);
      ASSERT_LT(r, 1.0);
      ASSERT_NEAR(c.q[k], std::log((1 + r) / (1 - r)), 1e-8);
      for (std::size_t j = 1; j < grid.size(); ++j) ASSERT_LE(c.gamma[k][j - 1], c.gamma[k][j]);
      ASSERT_GT(c.gamma[k][1], c.gamma[k - 1][1]);
    }
    // The hyperbolic angle is increasing in gamma and vanishes at gamma = 0.
    const cplx V = c.V.back();
    EXPECT_NEAR(carousel_angle(V, 0.0), 0.0, 1e-14);
    for (double g = 0.1; g < 20.0; g += 0.1) {
      EXPECT_GT(carousel_angle(V, g), carousel_angle(V, g - 0.1));
    }
    EXPECT_NEAR(carousel_angle(V, 2 * pi), 2 * pi, 1e-12);
  }
}

TEST(Carousel, RadialProcessMatchesDirectIntegration) {
  const double dt = 1e-4;
  for (std::uint64_t s = 0; s < 10; ++s) {
    auto t = tape(6000 + s, dt, 20000);
    const std::vector<double> grid{1.0};
    auto c = integrate_carousel(grid, 2.0, t, 1);
    const std::size_t start = 2000;
    auto q = q_from_radial_noise(c, t, start);
    double worst = 0.0;
    for (std::size_t k = 0; k < q.size(); ++k) {
      worst = std::max(worst, std::abs(q[k] - c.q[start + k]));
    }
    EXPECT_LT(worst, 10.0 * std::sqrt(dt));
  }
}
