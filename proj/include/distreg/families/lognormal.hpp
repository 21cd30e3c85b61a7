#pragma once

#include "distreg/families_base.hpp"

namespace distreg {

/// Log-normal with parameters (mu, sigma2): the mean and variance of
/// log(y). Identity response for mu, exponential for sigma2.
class LogNormalFamily final : public Family {
public:
  FamilyId id() const override { return FamilyId::lognormal; }
  std::string_view name() const override { return "lognormal"; }
  int param_count() const override { return 2; }
  std::string_view param_name(int k) const override { return k == 0 ? "mu" : "sigma2"; }
  Link link(int k) const override { return k == 0 ? Link::identity : Link::log_link; }

  double log_density(double y, const ParamVector& t) const override {
    require_y(y);
    check(t);
    const double ly = std::log(y);
    const double z = ly - t[0];
    return -0.5 * kLogTwoPi - 0.5 * std::log(t[1]) - ly - 0.5 * z * z / t[1];
  }

  double cdf(double y, const ParamVector& t) const override {
    require_y(y);
    check(t);
    return norm_cdf((std::log(y) - t[0]) / std::sqrt(t[1]));
  }

  double ccdf(double y, const ParamVector& t) const override {
    require_y(y);
    check(t);
    return norm_ccdf((std::log(y) - t[0]) / std::sqrt(t[1]));
  }

  double quantile(double p, const ParamVector& t) const override {
    require_prob(p);
    check(t);
    return std::exp(t[0] + std::sqrt(t[1]) * norm_quantile(p));
  }

  double sample(const ParamVector& t, Rng& rng) const override {
    check(t);
    return std::exp(t[0] + std::sqrt(t[1]) * draw_normal(rng));
  }

  double score(double y, const ParamVector& t, int k) const override {
    require_y(y);
    check(t);
    const double z = std::log(y) - t[0];
    if (k == 0) return z / t[1];
    return -0.5 + 0.5 * z * z / t[1];
  }

  double expected_weight(const ParamVector& t, int k) const override {
    check(t);
    return k == 0 ? 1.0 / t[1] : 0.5;
  }

  double sq_density_integral(const ParamVector& t) const override {
    check(t);
    const double sigma = std::sqrt(t[1]);
    return std::exp(0.25 * t[1] - t[0]) / (2.0 * std::sqrt(M_PI) * sigma);
  }

  ParamVector moment_init(const Array& y) const override {
    const Array ly = y.log();
    const double m = ly.mean();
    const double v = std::max((ly - m).square().sum() / std::max<Index>(1, y.size() - 1), 1e-6);
    return {m, v};
  }

  void score_weight(const Obs& obs, const ParamArrays& t, int k, Array& v, Array& w) const override {
    const Array z = obs.log_y - t.col[0];
    if (k == 0) {
      v = z / t.col[1];
      w = t.col[1].inverse();
    } else {
      v = 0.5 * z.square() / t.col[1] - 0.5;
      w = Array::Constant(obs.n(), 0.5);
    }
  }

  double log_density_sum(const Obs& obs, const ParamArrays& t) const override {
    const Array z = obs.log_y - t.col[0];
    return (-0.5 * t.col[1].log() - 0.5 * z.square() / t.col[1]).sum() - obs.log_y.sum() -
           0.5 * kLogTwoPi * static_cast<double>(obs.n());
  }

private:
  static void check(const ParamVector& t) {
    if (!std::isfinite(t[0])) throw NumericError("parameter on boundary: mu");
    require_positive(t[1], "sigma2");
  }
};

}  // namespace distreg
