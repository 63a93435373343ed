#include <gtest/gtest.h>

#include <cmath>

#include "schrolab/stats.hpp"

using namespace schrolab::stats;

// Reference values computed independently with scipy.stats.
TEST(Stats, Chi2Survival) {
  EXPECT_NEAR(chi2_sf(10.0, 5.0), 0.07523524614651217, 1e-12);
  EXPECT_NEAR(chi2_sf(30.5, 23.0), 0.13557982207582203, 1e-12);
  EXPECT_EQ(chi2_sf(0.0, 3.0), 1.0);
}

TEST(Stats, KolmogorovQ) {
  EXPECT_NEAR(kolmogorov_q(1.0), 0.26999967167735456, 1e-12);
  EXPECT_NEAR(kolmogorov_q(0.5), 0.9639452436648751, 1e-12);
  EXPECT_NEAR(kolmogorov_q(1.8), 0.003067621347579706, 1e-12);
  EXPECT_EQ(kolmogorov_q(0.0), 1.0);
}

TEST(Stats, KsStatistics) {
  const std::vector<double> x{0.1, 0.5, 0.9, 1.3, -0.2};
  EXPECT_NEAR(ks_one_sample(x, normal_cdf).statistic, 0.42074029056089696, 1e-12);
  const std::vector<double> a{1, 2, 3, 4, 5, 6.5}, b{2.5, 3.5, 7, 8};
  EXPECT_NEAR(ks_two_sample(a, b).statistic, 0.5, 1e-15);
  EXPECT_EQ(ks_two_sample(a, a).statistic, 0.0);
}

TEST(Stats, Moments) {
  const std::vector<double> x{1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(mean(x), 2.5);
  EXPECT_DOUBLE_EQ(variance(x), 5.0 / 3.0);
  const std::vector<double> y{2, 4, 6, 8};
  EXPECT_DOUBLE_EQ(covariance(x, y), 10.0 / 3.0);
  EXPECT_NEAR(correlation(x, y), 1.0, 1e-15);
  auto f = linear_fit(x, y);
  EXPECT_NEAR(f.slope, 2.0, 1e-14);
  EXPECT_NEAR(f.intercept, 0.0, 1e-14);
}

TEST(Stats, TwoSampleCountsChi2) {
  std::vector<long> a, b;
  for (int i = 0; i < 400; ++i) {
    a.push_back(i % 4);
    b.push_back((i + 1) % 4);
  }
  a.push_back(9);  // lone tail value gets pooled
  auto r = chi2_two_sample_counts(a, b);
  EXPECT_EQ(r.dof, 3.0);
  EXPECT_GT(r.p_value, 0.9);
  std::vector<long> tiny{0, 1};
  EXPECT_THROW(chi2_two_sample_counts(tiny, tiny), std::invalid_argument);
  EXPECT_EQ(ks_distance_counts(a, a), 0.0);
}

TEST(Stats, Chi2Gof) {
  const std::vector<double> o{10, 20, 30}, e{20, 20, 20};
  auto r = chi2_gof(o, e);
  EXPECT_DOUBLE_EQ(r.statistic, 10.0);
  EXPECT_EQ(r.dof, 2.0);
  EXPECT_NEAR(r.p_value, std::exp(-5.0), 1e-12);
}
