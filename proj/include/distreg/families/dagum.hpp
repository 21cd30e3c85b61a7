#pragma once

#include <algorithm>
#include <vector>

#include "distreg/families_base.hpp"

namespace distreg {

namespace detail {

inline constexpr double kEulerGamma = 0.57721566490153286061;
inline constexpr double kPiSqOver6 = 1.6449340668482264365;

/// E[u^s logit(u)^2] for u on (0,1) with density proportional to u^{c-1},
/// written with digamma/trigamma values at s+2 supplied by the caller.
inline double dagum_logit_sq_moment(double s, double dg_s2, double tg_s2) {
  const double a = s + 1.0;
  const double d = dg_s2 + kEulerGamma;
  return 2.0 / (a * a * a) - 2.0 * d / (a * a) + (d * d + kPiSqOver6 + tg_s2) / a;
}

/// Expected Fisher weight of the Dagum shape parameter a on the log
/// predictor scale; depends on c only. Under the model, u = (1+(y/b)^-a)^-1
/// is Beta(c, 1), which reduces the expectation to polygamma terms.
inline double dagum_weight_a(double c) {
  const double dg2 = boost::math::digamma(c + 2.0);
  const double tg2 = boost::math::trigamma(c + 2.0);
  const double dg3 = dg2 + 1.0 / (c + 2.0);
  const double tg3 = tg2 - 1.0 / ((c + 2.0) * (c + 2.0));
  const double m1 = dagum_logit_sq_moment(c, dg2, tg2);
  const double m2 = dagum_logit_sq_moment(c + 1.0, dg3, tg3);
  return 1.0 + (c + 1.0) * c * (m1 - m2);
}

}  // namespace detail

/// Dagum distribution with shape a, scale b and shape c:
/// p(y|a,b,c) = a c y^{ac-1} / (b^{ac} (1 + (y/b)^a)^{c+1}).
/// Log response for all three parameters.
class DagumFamily final : public Family {
public:
  FamilyId id() const override { return FamilyId::dagum; }
  std::string_view name() const override { return "dagum"; }
  int param_count() const override { return 3; }
  std::string_view param_name(int k) const override {
    return k == 0 ? "a" : (k == 1 ? "b" : "c");
  }
  Link link(int) const override { return Link::log_link; }

  double log_density(double y, const ParamVector& t) const override {
    require_y(y);
    check(t);
    const double a = t[0], b = t[1], c = t[2];
    const double lt = a * (std::log(y) - std::log(b));
    return std::log(a) + std::log(c) + (a * c - 1.0) * std::log(y) - a * c * std::log(b) -
           (c + 1.0) * softplus(lt);
  }

  double cdf(double y, const ParamVector& t) const override {
    require_y(y);
    check(t);
    const double lt = t[0] * (std::log(y) - std::log(t[1]));
    return std::exp(-t[2] * softplus(-lt));
  }

  double ccdf(double y, const ParamVector& t) const override {
    require_y(y);
    check(t);
    const double lt = t[0] * (std::log(y) - std::log(t[1]));
    return -std::expm1(-t[2] * softplus(-lt));
  }

  double quantile(double p, const ParamVector& t) const override {
    require_prob(p);
    check(t);
    return t[1] * std::pow(std::pow(p, -1.0 / t[2]) - 1.0, -1.0 / t[0]);
  }

  double sample(const ParamVector& t, Rng& rng) const override {
    check(t);
    return quantile(draw_uniform(rng), t);
  }

  double score(double y, const ParamVector& t, int k) const override {
    require_y(y);
    check(t);
    const double a = t[0], c = t[2];
    const double lt = a * (std::log(y) - std::log(t[1]));
    const double u = sigmoid(lt);
    switch (k) {
      case 0: return 1.0 + lt * (c - (c + 1.0) * u);
      case 1: return a * ((c + 1.0) * u - c);
      default: return 1.0 - c * softplus(-lt);  // 1 + c log(u)
    }
  }

  double expected_weight(const ParamVector& t, int k) const override {
    check(t);
    const double a = t[0], c = t[2];
    switch (k) {
      case 0: return detail::dagum_weight_a(c);
      case 1: return a * a * c / (c + 2.0);
      default: return 1.0;
    }
  }

  // Finite only when a > 1/(2c).
  double sq_density_integral(const ParamVector& t) const override {
    check(t);
    const double a = t[0], b = t[1], c = t[2];
    if (2.0 * c - 1.0 / a <= 0.0) {
      throw NumericError("squared-density integral diverges for Dagum with a <= 1/(2c)");
    }
    const double log_value = std::log(a) + 2.0 * std::log(c) - std::log(b) +
                             lgamma_fn(2.0 * c - 1.0 / a) + lgamma_fn(2.0 + 1.0 / a) -
                             lgamma_fn(2.0 * c + 2.0);
    return std::exp(log_value);
  }

  // Median for scale; the log-logistic relation pi/(a sqrt(3)) = sd(log y)
  // for spread; c starts at 1.
  ParamVector moment_init(const Array& y) const override {
    std::vector<double> v(y.data(), y.data() + y.size());
    std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
    const double med = v[v.size() / 2];
    const Array ly = y.log();
    const double m = ly.mean();
    const double sd =
        std::sqrt(std::max((ly - m).square().sum() / std::max<Index>(1, y.size() - 1), 1e-8));
    const double a0 = std::clamp(M_PI / (std::sqrt(3.0) * sd), 0.3, 30.0);
    return {a0, med, 1.0};
  }

  void score_weight(const Obs& obs, const ParamArrays& t, int k, Array& v, Array& w) const override {
    const Array& a = t.col[0];
    const Array& b = t.col[1];
    const Array& c = t.col[2];
    const Array lt = a * (obs.log_y - b.log());
    const Array u = (1.0 + (-lt).exp().min(1e300)).inverse();
    switch (k) {
      case 0: {
        v = 1.0 + lt * (c - (c + 1.0) * u);
        const Index n = obs.n();
        w.resize(n);
        for (Index i = 0; i < n; ++i) w[i] = detail::dagum_weight_a(c[i]);
        break;
      }
      case 1:
        v = a * ((c + 1.0) * u - c);
        w = a.square() * c / (c + 2.0);
        break;
      default: {
        // softplus(-lt) done branchless: max(-lt,0) + log1p(exp(-|lt|))
        const Array sp = (-lt).max(0.0) + (1.0 + (-lt.abs()).exp()).log();
        v = 1.0 - c * sp;
        w = Array::Ones(obs.n());
        break;
      }
    }
  }

  double log_density_sum(const Obs& obs, const ParamArrays& t) const override {
    const Array& a = t.col[0];
    const Array& b = t.col[1];
    const Array& c = t.col[2];
    const Array lb = b.log();
    const Array lt = a * (obs.log_y - lb);
    const Array sp = lt.max(0.0) + (1.0 + (-lt.abs()).exp()).log();
    return (a.log() + c.log() + (a * c - 1.0) * obs.log_y - a * c * lb - (c + 1.0) * sp).sum();
  }

private:
  static void check(const ParamVector& t) {
    require_positive(t[0], "a");
    require_positive(t[1], "b");
    require_positive(t[2], "c");
  }
};

}  // namespace distreg
