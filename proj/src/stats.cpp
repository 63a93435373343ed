#include "schrolab/stats.hpp"

#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

namespace schrolab::stats {

double mean(std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("mean of empty sample");
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
  if (x.size() < 2) throw std::invalid_argument("variance needs two values");
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

double stderr_mean(std::span<const double> x) {
  return std::sqrt(variance(x) / static_cast<double>(x.size()));
}

double stderr_variance(std::span<const double> x) {
  const double m = mean(x);
  const double n = static_cast<double>(x.size());
  double m2 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = (v - m) * (v - m);
    m2 += d;
    m4 += d * d;
  }
  m2 /= n;
  m4 /= n;
  return std::sqrt(std::max(0.0, m4 - m2 * m2) / n);
}

double covariance(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("covariance: bad sizes");
  const double mx = mean(x), my = mean(y);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - mx) * (y[i] - my);
  return s / static_cast<double>(x.size() - 1);
}

double stderr_covariance(std::span<const double> x, std::span<const double> y) {
  const double mx = mean(x), my = mean(y);
  std::vector<double> p(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) p[i] = (x[i] - mx) * (y[i] - my);
  return stderr_mean(p);
}

double correlation(std::span<const double> x, std::span<const double> y) {
  return covariance(x, y) / std::sqrt(variance(x) * variance(y));
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

double kolmogorov_q(double t) {
  if (t <= 0.0) return 1.0;
  if (t < 0.2) return 1.0;  // series converges slowly here; Q is 1 to double precision
  double s = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * t * t);
    s += (k % 2 == 1 ? term : -term);
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

namespace {
double ks_p(double d, double ne) {
  const double sq = std::sqrt(ne);
  return kolmogorov_q((sq + 0.12 + 0.11 / sq) * d);
}
}  // namespace

TestResult ks_one_sample(std::span<const double> x, const std::function<double(double)>& cdf) {
  if (x.empty()) throw std::invalid_argument("KS on empty sample");
  std::vector<double> s(x.begin(), x.end());
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double d = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double f = cdf(s[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return {d, ks_p(d, n), 0.0};
}

TestResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("KS on empty sample");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double na = static_cast<double>(x.size()), nb = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return {d, ks_p(d, na * nb / (na + nb)), 0.0};
}

double chi2_sf(double x, double dof) {
  if (!(dof > 0.0)) throw std::invalid_argument("chi2 needs positive dof");
  if (x <= 0.0) return 1.0;
  return boost::math::gamma_q(dof / 2.0, x / 2.0);
}

TestResult chi2_gof(std::span<const double> observed, std::span<const double> expected,
                    int fitted) {
  if (observed.size() != expected.size() || observed.size() < 2) {
    throw std::invalid_argument("chi2_gof: bad bin arrays");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (!(expected[i] > 0.0)) throw std::invalid_argument("chi2_gof: non-positive expected count");
    s += (observed[i] - expected[i]) * (observed[i] - expected[i]) / expected[i];
  }
  const double dof = static_cast<double>(observed.size()) - 1.0 - fitted;
  return {s, chi2_sf(s, dof), dof};
}

TestResult chi2_two_sample_counts(std::span<const long> a, std::span<const long> b,
                                  double min_expected) {
  if (a.empty() || b.empty()) throw std::invalid_argument("two-sample chi2 on empty sample");
  std::map<long, std::pair<double, double>> cells;
  for (long v : a) cells[v].first += 1.0;
  for (long v : b) cells[v].second += 1.0;
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double fa = na / (na + nb), fb = nb / (na + nb);
  auto ok = [&](const std::pair<double, double>& c) {
    const double t = c.first + c.second;
    return t * fa >= min_expected && t * fb >= min_expected;
  };
  std::vector<std::pair<double, double>> bins;
  for (const auto& [k, c] : cells) bins.push_back(c);
  // Merge from the left tail inward, then from the right tail inward.
  std::vector<std::pair<double, double>> merged;
  std::pair<double, double> acc{0.0, 0.0};
  for (const auto& c : bins) {
    acc.first += c.first;
    acc.second += c.second;
    if (ok(acc)) {
      merged.push_back(acc);
      acc = {0.0, 0.0};
    }
  }
  if (acc.first + acc.second > 0.0) {
    if (merged.empty()) {
      merged.push_back(acc);
    } else {
      merged.back().first += acc.first;
      merged.back().second += acc.second;
    }
  }
  if (merged.size() < 2) {
    throw std::invalid_argument("two-sample chi2: fewer than two cells with expected count >= 5");
  }
  double s = 0.0;
  for (const auto& c : merged) {
    const double t = c.first + c.second;
    const double ea = t * fa, eb = t * fb;
    s += (c.first - ea) * (c.first - ea) / ea + (c.second - eb) * (c.second - eb) / eb;
  }
  const double dof = static_cast<double>(merged.size()) - 1.0;
  return {s, chi2_sf(s, dof), dof};
}

double ks_distance_counts(std::span<const long> a, std::span<const long> b) {
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  return ks_two_sample(x, y).statistic;
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("linear_fit: bad sizes");
  const double mx = mean(x), my = mean(y);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (x.size() > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = y[i] - f.intercept - f.slope * x[i];
      rss += r * r;
    }
    f.slope_stderr = std::sqrt(rss / static_cast<double>(x.size() - 2) / sxx);
  }
  return f;
}

}  // namespace schrolab::stats
