#pragma once

#include <boost/math/tools/toms748_solve.hpp>

#include "distreg/families_base.hpp"

namespace distreg {

/// Inverse Gaussian with mean mu and dispersion sigma2 (the classical
/// shape parameter is lambda = 1/sigma2). Log response for both.
class InverseGaussianFamily final : public Family {
public:
  FamilyId id() const override { return FamilyId::inverse_gaussian; }
  std::string_view name() const override { return "invgauss"; }
  int param_count() const override { return 2; }
  std::string_view param_name(int k) const override { return k == 0 ? "mu" : "sigma2"; }
  Link link(int) const override { return Link::log_link; }

  double log_density(double y, const ParamVector& t) const override {
    require_y(y);
    check(t);
    const double d = y - t[0];
    return -0.5 * kLogTwoPi - 0.5 * std::log(t[1]) - 1.5 * std::log(y) -
           0.5 * d * d / (y * t[0] * t[0] * t[1]);
  }

  double cdf(double y, const ParamVector& t) const override {
    require_y(y);
    check(t);
    const double mu = t[0];
    const double lambda = 1.0 / t[1];
    const double r = std::sqrt(lambda / y);
    const double first = norm_cdf(r * (y / mu - 1.0));
    const double second = std::exp(2.0 * lambda / mu + norm_logcdf(-r * (y / mu + 1.0)));
    return std::min(first + second, 1.0);
  }

  double ccdf(double y, const ParamVector& t) const override {
    require_y(y);
    check(t);
    const double mu = t[0];
    const double lambda = 1.0 / t[1];
    const double r = std::sqrt(lambda / y);
    const double first = norm_ccdf(r * (y / mu - 1.0));
    const double second = std::exp(2.0 * lambda / mu + norm_logcdf(-r * (y / mu + 1.0)));
    return std::max(first - second, 0.0);
  }

  // No closed form: monotone bracketing plus TOMS 748.
  double quantile(double p, const ParamVector& t) const override {
    require_prob(p);
    check(t);
    double lo = t[0], hi = t[0];
    if (cdf(lo, t) > p) {
      while (cdf(lo, t) > p) lo *= 0.5;
      hi = 2.0 * lo;
    } else {
      while (cdf(hi, t) < p) hi *= 2.0;
      lo = 0.5 * hi;
    }
    auto f = [&](double y) { return cdf(y, t) - p; };
    boost::math::tools::eps_tolerance<double> tol(50);
    std::uintmax_t max_iter = 200;
    auto range = boost::math::tools::toms748_solve(f, lo, hi, tol, max_iter);
    return 0.5 * (range.first + range.second);
  }

  // Michael/Schucany/Haas transformation with a uniform accept step.
  double sample(const ParamVector& t, Rng& rng) const override {
    check(t);
    const double mu = t[0];
    const double lambda = 1.0 / t[1];
    const double z = draw_normal(rng);
    const double nu = z * z;
    const double x = mu + 0.5 * mu * mu * nu / lambda -
                     0.5 * (mu / lambda) * std::sqrt(4.0 * mu * lambda * nu + mu * mu * nu * nu);
    const double u = draw_uniform(rng);
    if (u <= mu / (mu + x)) return x;
    return mu * mu / x;
  }

  double score(double y, const ParamVector& t, int k) const override {
    require_y(y);
    check(t);
    const double mu = t[0];
    const double d = y - mu;
    if (k == 0) return d / (t[1] * mu * mu);
    return -0.5 + 0.5 * d * d / (y * mu * mu * t[1]);
  }

  double expected_weight(const ParamVector& t, int k) const override {
    check(t);
    return k == 0 ? 1.0 / (t[1] * t[0]) : 0.5;
  }

  ParamVector moment_init(const Array& y) const override {
    const double m = y.mean();
    const double v = std::max((y - m).square().sum() / std::max<Index>(1, y.size() - 1), 1e-8);
    return {m, std::max(v / (m * m * m), 1e-6)};
  }

  void score_weight(const Obs& obs, const ParamArrays& t, int k, Array& v, Array& w) const override {
    const Array& mu = t.col[0];
    const Array& s2 = t.col[1];
    const Array d = obs.y - mu;
    if (k == 0) {
      v = d / (s2 * mu.square());
      w = (s2 * mu).inverse();
    } else {
      v = 0.5 * d.square() / (obs.y * mu.square() * s2) - 0.5;
      w = Array::Constant(obs.n(), 0.5);
    }
  }

  double log_density_sum(const Obs& obs, const ParamArrays& t) const override {
    const Array d = obs.y - t.col[0];
    return (-0.5 * t.col[1].log() - 0.5 * d.square() / (obs.y * t.col[0].square() * t.col[1])).sum() -
           1.5 * obs.log_y.sum() - 0.5 * kLogTwoPi * static_cast<double>(obs.n());
  }

private:
  static void check(const ParamVector& t) {
    require_positive(t[0], "mu");
    require_positive(t[1], "sigma2");
  }
};

}  // namespace distreg
