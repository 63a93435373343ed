#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "schrolab/randomness.hpp"
#include "schrolab/stats.hpp"

using namespace schrolab;

// Known-answer vectors for Philox4x32-10 (Random123 distribution).
TEST(Philox, KnownAnswers) {
  using C = Philox4x32::Counter;
  using K = Philox4x32::Key;
  EXPECT_EQ(Philox4x32::block(C{0, 0, 0, 0}, K{0, 0}),
            (C{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
  EXPECT_EQ(Philox4x32::block(C{~0u, ~0u, ~0u, ~0u}, K{~0u, ~0u}),
            (C{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
  EXPECT_EQ(Philox4x32::block(C{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                              K{0xa4093822u, 0x299f31d0u}),
            (C{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(VariateStream, Deterministic) {
  VariateStream a(SeedSpec{42, 7}, purpose::omega), b(SeedSpec{42, 7}, purpose::omega);
  for (std::uint64_t i = 0; i < 100; ++i) {
    EXPECT_EQ(a.normal(i), b.normal(i));
    EXPECT_EQ(a.uniform(i), b.uniform(i));
  }
}

TEST(VariateStream, UniformOpenInterval) {
  VariateStream a(SeedSpec{1, 0}, 3);
  for (std::uint64_t i = 0; i < 10000; ++i) {
    const double u = a.uniform(i);
    EXPECT_GT(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

TEST(VariateStream, FillMatchesPointwise) {
  VariateStream a(SeedSpec{3, 4}, 9);
  std::vector<double> v(11);
  a.fill_normal(v, 2.0, 5);
  for (std::size_t j = 0; j < v.size(); ++j) EXPECT_EQ(v[j], 2.0 * a.normal(5 + j));
}

TEST(VariateStream, DistinctStreamsUncorrelated) {
  const std::size_t N = 100000;
  std::vector<double> x(N), y(N);
  VariateStream(SeedSpec{5, 0}, purpose::omega).fill_normal(x);
  VariateStream(SeedSpec{5, 1}, purpose::omega).fill_normal(y);
  EXPECT_LT(std::abs(stats::correlation(x, y)), 4.0 / std::sqrt(double(N)));
}

TEST(SampleOmega, RademacherSupport) {
  auto v = sample_omega(OmegaKind::rademacher, SeedSpec{9, 2}, 4);
  ASSERT_EQ(v.size(), 4u);
  for (double x : v) EXPECT_TRUE(x == 1.0 || x == -1.0);
  auto big = sample_omega(OmegaKind::rademacher, SeedSpec{9, 2}, 100000);
  EXPECT_NEAR(stats::mean(big), 0.0, 4.0 / std::sqrt(1e5));
}

TEST(SampleOmega, GaussianMoments) {
  auto v = sample_omega(OmegaKind::gaussian, SeedSpec{11, 0}, 1000000);
  EXPECT_LT(std::abs(stats::mean(v)), 4.0 / std::sqrt(1e6));
  EXPECT_NEAR(stats::variance(v), 1.0, 0.01);
}

TEST(SampleOmega, Empty) {
  EXPECT_TRUE(sample_omega(OmegaKind::gaussian, SeedSpec{1, 1}, 0).empty());
  EXPECT_TRUE(sample_omega(OmegaKind::rademacher, SeedSpec{1, 1}, 0).empty());
}

TEST(SampleOmega, ParseKinds) {
  EXPECT_EQ(parse_omega_kind("gaussian"), OmegaKind::gaussian);
  EXPECT_EQ(parse_omega_kind("rademacher"), OmegaKind::rademacher);
  EXPECT_THROW(parse_omega_kind("cauchy"), std::invalid_argument);
}

TEST(NoiseTape, RejectsBadShape) {
  EXPECT_THROW(NoiseTape::make(SeedSpec{}, 0.0, 10, ChannelSet::critical()), std::invalid_argument);
  EXPECT_THROW(NoiseTape::make(SeedSpec{}, -1e-3, 10, ChannelSet::critical()), std::invalid_argument);
  EXPECT_THROW(NoiseTape::make(SeedSpec{}, 1e-3, 0, ChannelSet::critical()), std::invalid_argument);
}

TEST(NoiseTape, ReplayIsBitIdentical) {
  auto a = NoiseTape::make(SeedSpec{77, 3}, 1e-3, 500, ChannelSet::all());
  auto b = NoiseTape::make(SeedSpec{77, 3}, 1e-3, 500, ChannelSet::all());
  for (Channel c : {Channel::B, Channel::B1, Channel::B2, Channel::B3}) {
    auto x = a.channel(c), y = b.channel(c);
    ASSERT_EQ(x.size(), y.size());
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(x[i], y[i]);
  }
}

TEST(NoiseTape, MissingChannelThrows) {
  auto a = NoiseTape::make(SeedSpec{1, 0}, 1e-3, 10, ChannelSet::critical());
  EXPECT_FALSE(a.has(Channel::B1));
  EXPECT_THROW(a.channel(Channel::B1), std::out_of_range);
}

TEST(NoiseTape, BrownianVarianceEqualsTime) {
  const std::size_t tapes = 10000, steps = 10000;
  std::vector<double> end(tapes);
  for (std::size_t k = 0; k < tapes; ++k) {
    auto t = NoiseTape::make(SeedSpec{2024, k}, 1e-4, steps, ChannelSet{Channel::B});
    auto b = t.channel(Channel::B);
    end[k] = std::accumulate(b.begin(), b.end(), 0.0);
  }
  EXPECT_LT(std::abs(stats::variance(end) - 1.0), 3.0 * stats::stderr_variance(end));
}

TEST(NoiseTape, ChannelsUncorrelated) {
  const std::size_t steps = 100000;
  auto t = NoiseTape::make(SeedSpec{8, 8}, 1e-4, steps, ChannelSet::critical());
  const Channel cs[3] = {Channel::B, Channel::B2, Channel::B3};
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      EXPECT_LT(std::abs(stats::correlation(t.channel(cs[i]), t.channel(cs[j]))),
                4.0 / std::sqrt(double(steps)));
    }
  }
}

TEST(NoiseTape, IncrementsGaussianKS) {
  const double dt = 1e-4;
  auto t = NoiseTape::make(SeedSpec{31, 0}, dt, 100000, ChannelSet::all());
  for (Channel c : {Channel::B, Channel::B1, Channel::B2, Channel::B3}) {
    auto x = t.channel(c);
    std::vector<double> z(x.begin(), x.end());
    for (double& v : z) v /= std::sqrt(dt);
    EXPECT_GT(stats::ks_one_sample(z, stats::normal_cdf).p_value, 1e-3) << to_string(c);
  }
}

TEST(NoiseTape, SliceIdentityAndPartition) {
  auto t = NoiseTape::make(SeedSpec{4, 4}, 0.01, 100, ChannelSet::critical());
  auto full = t.slice(0.0, t.duration());
  auto orig = t.channel(Channel::B);
  auto s = full.channel(Channel::B);
  ASSERT_EQ(s.size(), orig.size());
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(s[i], orig[i]);

  auto left = t.slice(0.0, 0.3), right = t.slice(0.3, 1.0);
  EXPECT_EQ(left.steps(), 30u);
  EXPECT_EQ(right.steps(), 70u);
  std::vector<double> cat;
  for (double v : left.channel(Channel::B2)) cat.push_back(v);
  for (double v : right.channel(Channel::B2)) cat.push_back(v);
  auto b2 = t.channel(Channel::B2);
  ASSERT_EQ(cat.size(), b2.size());
  for (std::size_t i = 0; i < cat.size(); ++i) EXPECT_EQ(cat[i], b2[i]);
  // Disjoint slices address disjoint subranges.
  EXPECT_EQ(left.channel(Channel::B).data() + left.steps(), right.channel(Channel::B).data());
  // Nested slice is relative to its parent view.
  auto inner = right.slice(0.1, 0.2);
  EXPECT_EQ(inner.channel(Channel::B3)[0], t.channel(Channel::B3)[40]);
}

TEST(NoiseTape, SliceRejectsMisalignedOrOutOfRange) {
  auto t = NoiseTape::make(SeedSpec{4, 4}, 0.01, 100, ChannelSet::critical());
  EXPECT_THROW(t.slice(0.0, 0.005), std::invalid_argument);
  EXPECT_THROW(t.slice(0.0151, 0.5), std::invalid_argument);
  EXPECT_THROW(t.slice(0.5, 0.5), std::invalid_argument);
  EXPECT_THROW(t.slice(-0.01, 0.5), std::invalid_argument);
  EXPECT_THROW(t.slice(0.5, 1.5), std::invalid_argument);
}

TEST(NoiseTape, CoarsenAndRefineKeepPath) {
  auto t = NoiseTape::make(SeedSpec{6, 1}, 0.01, 64, ChannelSet::critical());
  auto c = t.coarsened();
  EXPECT_EQ(c.steps(), 32u);
  EXPECT_DOUBLE_EQ(c.dt(), 0.02);
  EXPECT_NEAR(c.channel(Channel::B)[3], t.channel(Channel::B)[6] + t.channel(Channel::B)[7], 1e-15);

  auto r = t.refined();
  EXPECT_EQ(r.steps(), 128u);
  for (std::size_t k = 0; k < 64; ++k) {
    EXPECT_NEAR(r.channel(Channel::B2)[2 * k] + r.channel(Channel::B2)[2 * k + 1],
                t.channel(Channel::B2)[k], 1e-14);
  }
  auto r2 = t.refined();
  EXPECT_EQ(r.channel(Channel::B)[5], r2.channel(Channel::B)[5]);
  // Refining then coarsening returns the original increments.
  auto back = r.coarsened();
  for (std::size_t k = 0; k < 64; ++k) {
    EXPECT_NEAR(back.channel(Channel::B3)[k], t.channel(Channel::B3)[k], 1e-14);
  }
}

TEST(NoiseTape, RefinedIncrementVariance) {
  auto t = NoiseTape::make(SeedSpec{12, 0}, 1e-3, 50000, ChannelSet{Channel::B});
  auto r = t.refined();
  auto x = r.channel(Channel::B);
  std::vector<double> z(x.begin(), x.end());
  for (double& v : z) v /= std::sqrt(r.dt());
  EXPECT_GT(stats::ks_one_sample(z, stats::normal_cdf).p_value, 1e-3);
}

TEST(NoiseTape, ZeroTape) {
  auto t = NoiseTape::zero(0.1, 10, ChannelSet::all());
  for (double v : t.channel(Channel::B1)) EXPECT_EQ(v, 0.0);
  auto r = t.refined();
  for (double v : r.channel(Channel::B3)) EXPECT_EQ(v, 0.0);
}

TEST(NoiseTape, FromIncrements) {
  std::vector<std::pair<Channel, std::vector<double>>> inc{{Channel::B, {1.0, 2.0, 3.0}},
                                                           {Channel::B2, {0.0, 0.0, 1.0}}};
  auto t = NoiseTape::from_increments(0.5, inc);
  EXPECT_EQ(t.steps(), 3u);
  EXPECT_EQ(t.channel(Channel::B)[2], 3.0);
  EXPECT_TRUE(t.has(Channel::B2));
  EXPECT_FALSE(t.has(Channel::B3));
  std::vector<std::pair<Channel, std::vector<double>>> bad{{Channel::B, {1.0}},
                                                           {Channel::B2, {0.0, 0.0}}};
  EXPECT_THROW(NoiseTape::from_increments(0.5, bad), std::invalid_argument);
}
