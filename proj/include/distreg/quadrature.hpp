#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <vector>

#include "distreg/common.hpp"

namespace distreg {

/// Adaptive Gauss-Kronrod integration over [a, b]; b may be infinity.
template <typename F>
double integrate(F&& f, double a, double b, double rel_tol = 1e-10) {
  double error = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      std::forward<F>(f), a, b, 15, rel_tol, &error);
  return value;
}

/// Fixed Gauss-Legendre rule on (0, 1).
struct GaussLegendre {
  std::vector<double> nodes;    // in (0, 1)
  std::vector<double> weights;  // sum to 1

  explicit GaussLegendre(int n) {
    nodes.resize(n);
    weights.resize(n);
    // Newton iteration on Legendre polynomials over [-1, 1]
    for (int i = 0; i < n; ++i) {
      double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
      double dp = 0.0;
      for (int iter = 0; iter < 100; ++iter) {
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
          const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-15) break;
      }
      // map from [-1, 1] to (0, 1); nodes come out in decreasing x
      nodes[n - 1 - i] = 0.5 * (x + 1.0);
      weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
  }

  template <typename F>
  double apply(F&& f) const {
    double s = 0.0;
    for (size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(nodes[i]);
    return s;
  }
};

/// Shared 256-node rule for quantile-level integrals.
inline const GaussLegendre& quantile_rule() {
  static const GaussLegendre rule(256);
  return rule;
}

}  // namespace distreg
