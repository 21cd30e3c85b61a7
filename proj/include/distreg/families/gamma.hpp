#pragma once

#include "distreg/families_base.hpp"

namespace distreg {

/// Gamma with mean mu and shape sigma, density
/// (sigma/mu)^sigma y^{sigma-1} exp(-sigma y / mu) / Gamma(sigma).
/// Log response for both parameters.
class GammaFamily final : public Family {
public:
  FamilyId id() const override { return FamilyId::gamma; }
  std::string_view name() const override { return "gamma"; }
  int param_count() const override { return 2; }
  std::string_view param_name(int k) const override { return k == 0 ? "mu" : "sigma"; }
  Link link(int) const override { return Link::log_link; }

  double log_density(double y, const ParamVector& t) const override {
    require_y(y);
    check(t);
    const double mu = t[0], sigma = t[1];
    return sigma * (std::log(sigma) - std::log(mu)) + (sigma - 1.0) * std::log(y) -
           lgamma_fn(sigma) - sigma * y / mu;
  }

  double cdf(double y, const ParamVector& t) const override {
    require_y(y);
    check(t);
    return gamma_p(t[1], t[1] * y / t[0]);
  }

  double ccdf(double y, const ParamVector& t) const override {
    require_y(y);
    check(t);
    return gamma_q(t[1], t[1] * y / t[0]);
  }

  double quantile(double p, const ParamVector& t) const override {
    require_prob(p);
    check(t);
    return t[0] / t[1] * gamma_p_inv(t[1], p);
  }

  double sample(const ParamVector& t, Rng& rng) const override {
    check(t);
    return std::gamma_distribution<double>(t[1], t[0] / t[1])(rng);
  }

  double score(double y, const ParamVector& t, int k) const override {
    require_y(y);
    check(t);
    const double mu = t[0], sigma = t[1];
    if (k == 0) return sigma * (y - mu) / mu;
    return sigma * (std::log(sigma) + 1.0 - std::log(mu) + std::log(y) - digamma_fn(sigma) -
                    y / mu);
  }

  double expected_weight(const ParamVector& t, int k) const override {
    check(t);
    const double sigma = t[1];
    if (k == 0) return sigma;
    return sigma * (sigma * trigamma_fn(sigma) - 1.0);
  }

  // Finite only for sigma > 1/2.
  double sq_density_integral(const ParamVector& t) const override {
    check(t);
    const double mu = t[0], sigma = t[1];
    if (sigma <= 0.5) throw NumericError("squared-density integral diverges for gamma shape <= 1/2");
    const double log_value = std::log(sigma) + lgamma_fn(2.0 * sigma - 1.0) - std::log(mu) -
                             2.0 * lgamma_fn(sigma) - (2.0 * sigma - 1.0) * std::log(2.0);
    return std::exp(log_value);
  }

  ParamVector moment_init(const Array& y) const override {
    const double m = y.mean();
    const double v = std::max((y - m).square().sum() / std::max<Index>(1, y.size() - 1), 1e-8);
    return {m, std::max(m * m / v, 1e-3)};
  }

  void score_weight(const Obs& obs, const ParamArrays& t, int k, Array& v, Array& w) const override {
    const Array& mu = t.col[0];
    const Array& sigma = t.col[1];
    if (k == 0) {
      v = sigma * (obs.y - mu) / mu;
      w = sigma;
      return;
    }
    const Index n = obs.n();
    Array dg(n), tg(n);
    for (Index i = 0; i < n; ++i) {
      dg[i] = digamma_fn(sigma[i]);
      tg[i] = trigamma_fn(sigma[i]);
    }
    v = sigma * (sigma.log() + 1.0 - mu.log() + obs.log_y - dg - obs.y / mu);
    w = sigma * (sigma * tg - 1.0);
  }

  double log_density_sum(const Obs& obs, const ParamArrays& t) const override {
    const Array& mu = t.col[0];
    const Array& sigma = t.col[1];
    double lg = 0.0;
    for (Index i = 0; i < obs.n(); ++i) lg += lgamma_fn(sigma[i]);
    return (sigma * (sigma.log() - mu.log()) + (sigma - 1.0) * obs.log_y - sigma * obs.y / mu)
               .sum() -
           lg;
  }

private:
  static void check(const ParamVector& t) {
    require_positive(t[0], "mu");
    require_positive(t[1], "sigma");
  }
};

}  // namespace distreg
