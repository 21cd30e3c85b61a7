#pragma once

#include <memory>
#include <string_view>

#include "distreg/common.hpp"
#include "distreg/quadrature.hpp"
#include "distreg/rng.hpp"
#include "distreg/special.hpp"

namespace distreg {

enum class FamilyId { lognormal, inverse_gaussian, gamma, dagum };

/// Response vector with cached transforms shared across sampler sweeps.
struct Obs {
  Array y;
  Array log_y;

  Obs() = default;
  explicit Obs(Array values) : y(std::move(values)) {
    if ((y <= 0.0).any() || !y.allFinite()) {
      throw DataError("responses must be positive and finite");
    }
    log_y = y.log();
  }
  Index n() const { return y.size(); }
};

/// A positive response distribution: density, distribution and quantile
/// functions, sampling, and the predictor-scale score and expected
/// Fisher weight for each of its parameters.
///
/// Parameterisations: log-normal (mu, sigma2), inverse Gaussian
/// (mu, sigma2), gamma (mean mu, shape sigma), Dagum (a, b, c) with
/// density a c y^{ac-1} / (b^{ac} (1 + (y/b)^a)^{c+1}). All parameters
/// use a log response function except the log-normal mu (identity).
class Family {
public:
  virtual ~Family() = default;

  virtual FamilyId id() const = 0;
  virtual std::string_view name() const = 0;
  virtual int param_count() const = 0;
  virtual std::string_view param_name(int k) const = 0;
  virtual Link link(int k) const = 0;

  virtual double log_density(double y, const ParamVector& t) const = 0;
  virtual double cdf(double y, const ParamVector& t) const = 0;
  virtual double ccdf(double y, const ParamVector& t) const { return 1.0 - cdf(y, t); }
  virtual double quantile(double p, const ParamVector& t) const = 0;
  virtual double sample(const ParamVector& t, Rng& rng) const = 0;

  /// d log p / d eta_k at the predictor scale (chain rule through the
  /// response function).
  virtual double score(double y, const ParamVector& t, int k) const = 0;

  /// E(-d^2 log p / d eta_k^2), strictly positive for interior parameters.
  virtual double expected_weight(const ParamVector& t, int k) const = 0;

  /// Integral of the squared density over (0, inf); closed form where one
  /// is implemented, otherwise adaptive quadrature split at the median.
  /// Throws NumericError when the integral diverges.
  virtual double sq_density_integral(const ParamVector& t) const {
    const double med = quantile(0.5, t);
    auto p2 = [&](double y) {
      const double l = log_density(y, t);
      return std::exp(2.0 * l);
    };
    const double lower = integrate(p2, 0.0, med, 1e-9);
    const double upper = integrate(p2, med, std::numeric_limits<double>::infinity(), 1e-9);
    return lower + upper;
  }

  /// Crude starting values on the natural scale for intercept-only
  /// initialisation of a sampler.
  virtual ParamVector moment_init(const Array& y) const = 0;

  /// Hot-path kernels over whole observation vectors. Defaults loop over
  /// the scalar API; families override with vectorised expressions.
  virtual void score_weight(const Obs& obs, const ParamArrays& t, int k, Array& v,
                            Array& w) const {
    const Index n = obs.n();
    v.resize(n);
    w.resize(n);
    for (Index i = 0; i < n; ++i) {
      const ParamVector ti = t.at(i);
      v[i] = score(obs.y[i], ti, k);
      w[i] = expected_weight(ti, k);
    }
  }

  virtual double log_density_sum(const Obs& obs, const ParamArrays& t) const {
    double s = 0.0;
    for (Index i = 0; i < obs.n(); ++i) s += log_density(obs.y[i], t.at(i));
    return s;
  }

protected:
  static void require_positive(double value, const char* what) {
    if (!(value > 0.0) || !std::isfinite(value)) {
      throw NumericError(std::string("parameter on boundary: ") + what);
    }
  }
  static void require_y(double y) {
    if (!(y > 0.0) || !std::isfinite(y)) throw NumericError("response must be positive and finite");
  }
  static void require_prob(double p) {
    if (!(p > 0.0 && p < 1.0)) throw NumericError("probability outside (0,1)");
  }
};

const Family& family(FamilyId id);
FamilyId family_id_from_string(const std::string& s);
std::string to_string(FamilyId id);

/// Index of the location-like parameter used when a single predictor is
/// shared across candidate families (mu, or b for the Dagum).
int primary_param(FamilyId id);

}  // namespace distreg
