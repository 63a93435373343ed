#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace schrolab::stats {

double mean(std::span<const double> x);
// Unbiased sample variance.
double variance(std::span<const double> x);
double stderr_mean(std::span<const double> x);
// Asymptotic standard error of the sample variance, sqrt((m4 - s^4) / N).
double stderr_variance(std::span<const double> x);
double covariance(std::span<const double> x, std::span<const double> y);
// Standard error of the sample covariance, from the variance of the centred products.
double stderr_covariance(std::span<const double> x, std::span<const double> y);
double correlation(std::span<const double> x, std::span<const double> y);

double normal_cdf(double x);
double normal_pdf(double x);

// Kolmogorov limiting survival function Q(t) = 2 sum (-1)^{k-1} exp(-2 k^2 t^2).
double kolmogorov_q(double t);

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  double dof = 0.0;
};

TestResult ks_one_sample(std::span<const double> x, const std::function<double(double)>& cdf);
TestResult ks_two_sample(std::span<const double> a, std::span<const double> b);

// Upper tail of chi^2 with dof degrees of freedom.
double chi2_sf(double x, double dof);

// Goodness of fit of observed bin counts against expected counts (same total
// implied). dof = bins - 1 - fitted.
TestResult chi2_gof(std::span<const double> observed, std::span<const double> expected,
                    int fitted = 0);

// Two-sample chi^2 homogeneity test on integer-valued samples. Tail values
// are pooled until every expected cell count is at least min_expected.
// Throws std::invalid_argument if fewer than two cells survive pooling.
TestResult chi2_two_sample_counts(std::span<const long> a, std::span<const long> b,
                                  double min_expected = 5.0);

// Sup distance between the empirical CDFs of two integer samples.
double ks_distance_counts(std::span<const long> a, std::span<const long> b);

// Ordinary least squares slope of y on x, with its standard error.
struct LinearFit {
  double slope = 0.0, intercept = 0.0, slope_stderr = 0.0;
};
LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

}  // namespace schrolab::stats
