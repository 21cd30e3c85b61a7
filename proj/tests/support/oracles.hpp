#pragma once

// Test-side oracles, kept independent of the library paths they check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "distreg/common.hpp"
#include "distreg/families.hpp"
#include "distreg/rng.hpp"

namespace oracles {

using distreg::Array;
using distreg::Family;
using distreg::ParamVector;

/// Central first difference of log_density composed with the response
/// function, with respect to the k-th predictor.
inline double fd_score(const Family& fam, double y, const ParamVector& t, int k,
                       double rel_step = 1e-5) {
  const distreg::Link link = fam.link(k);
  const double eta = distreg::invert_link(link, t[k]);
  const double h = rel_step * (1.0 + std::abs(eta));
  ParamVector lo = t, hi = t;
  hi[k] = distreg::apply_link(link, eta + h);
  lo[k] = distreg::apply_link(link, eta - h);
  return (fam.log_density(y, hi) - fam.log_density(y, lo)) / (2.0 * h);
}

/// Central second difference of log_density in the k-th predictor.
inline double fd_neg_hessian(const Family& fam, double y, const ParamVector& t, int k,
                             double rel_step = 1e-4) {
  const distreg::Link link = fam.link(k);
  const double eta = distreg::invert_link(link, t[k]);
  const double h = rel_step * (1.0 + std::abs(eta));
  ParamVector lo = t, hi = t;
  hi[k] = distreg::apply_link(link, eta + h);
  lo[k] = distreg::apply_link(link, eta - h);
  const double mid = fam.log_density(y, t);
  return -(fam.log_density(y, hi) - 2.0 * mid + fam.log_density(y, lo)) / (h * h);
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

inline MeanSe mean_se(const std::vector<double>& x) {
  const double n = static_cast<double>(x.size());
  const double m = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return {m, std::sqrt(ss / (n - 1.0) / n)};
}

/// One-sample Kolmogorov-Smirnov statistic against a continuous cdf.
inline double ks_statistic(std::vector<double> x, const std::function<double(double)>& cdf) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max(d, f - static_cast<double>(i) / n);
    d = std::max(d, static_cast<double>(i + 1) / n - f);
  }
  return d;
}

/// Asymptotic KS critical value.
inline double ks_critical(double n, double alpha) {
  return std::sqrt(-0.5 * std::log(alpha / 2.0)) / std::sqrt(n);
}

/// Gini coefficient from samples via the sorted (Lorenz-curve) estimator.
inline double gini_from_samples(std::vector<double> y) {
  std::sort(y.begin(), y.end());
  const double n = static_cast<double>(y.size());
  double total = 0.0, weighted = 0.0;
  for (size_t i = 0; i < y.size(); ++i) {
    total += y[i];
    weighted += static_cast<double>(i + 1) * y[i];
  }
  return 2.0 * weighted / (n * total) - (n + 1.0) / n;
}

/// Trapezoid integral over an equidistant grid.
inline double trapezoid(const Array& values, double step) {
  double s = values.sum() - 0.5 * (values[0] + values[values.size() - 1]);
  return s * step;
}

struct GridSummary {
  double mean1, sd1, mean2, sd2;
};

/// Posterior moments of a two-parameter model by brute-force grid
/// quadrature of the unnormalised log posterior.
inline GridSummary grid_posterior_2d(const std::function<double(double, double)>& log_post,
                                     double lo1, double hi1, double lo2, double hi2, int n = 400) {
  const double h1 = (hi1 - lo1) / (n - 1);
  const double h2 = (hi2 - lo2) / (n - 1);
  distreg::Matrix lp(n, n);
  double mx = -1e300;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      lp(i, j) = log_post(lo1 + i * h1, lo2 + j * h2);
      mx = std::max(mx, lp(i, j));
    }
  }
  double z = 0.0, m1 = 0.0, m2 = 0.0, s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double w = std::exp(lp(i, j) - mx);
      const double p1 = lo1 + i * h1;
      const double p2 = lo2 + j * h2;
      z += w;
      m1 += w * p1;
      m2 += w * p2;
      s1 += w * p1 * p1;
      s2 += w * p2 * p2;
    }
  }
  m1 /= z;
  m2 /= z;
  return {m1, std::sqrt(s1 / z - m1 * m1), m2, std::sqrt(s2 / z - m2 * m2)};
}

}  // namespace oracles
