#pragma once

#include <optional>

#include "distreg/modelsel.hpp"
#include "distreg/sampler.hpp"

namespace distreg {

/// Conditional moments; absent when the tail index forbids them.
struct Moments {
  std::optional<double> mean;
  std::optional<double> sd;
};

/// Dagum mean and standard deviation: moments of order m exist for
/// a > m, via b^m Gamma(c + m/a) Gamma(1 - m/a) / Gamma(c).
inline Moments dagum_moments(const ParamVector& t) {
  const double a = t[0], b = t[1], c = t[2];
  if (!(a > 0 && b > 0 && c > 0)) throw NumericError("parameter on boundary: dagum");
  Moments out;
  if (a > 1.0) {
    const double m1 = b * std::exp(lgamma_fn(c + 1.0 / a) + lgamma_fn(1.0 - 1.0 / a) - lgamma_fn(c));
    out.mean = m1;
    if (a > 2.0) {
      const double m2 =
          b * b * std::exp(lgamma_fn(c + 2.0 / a) + lgamma_fn(1.0 - 2.0 / a) - lgamma_fn(c));
      out.sd = std::sqrt(std::max(m2 - m1 * m1, 0.0));
    }
  }
  return out;
}

/// Dagum Gini coefficient, Gamma(c) Gamma(2c + 1/a) /
/// (Gamma(2c) Gamma(c + 1/a)) - 1; scale-free and defined for a > 1.
inline std::optional<double> dagum_gini(const ParamVector& t) {
  const double a = t[0], c = t[2];
  if (!(a > 0 && t[1] > 0 && c > 0)) throw NumericError("parameter on boundary: dagum");
  if (a <= 1.0) return std::nullopt;  // the Lorenz curve needs a finite mean
  return std::exp(lgamma_fn(c) + lgamma_fn(2.0 * c + 1.0 / a) - lgamma_fn(2.0 * c) -
                  lgamma_fn(c + 1.0 / a)) -
         1.0;
}

/// Monte Carlo Gini via the sorted Lorenz estimator, with a batch-based
/// standard error.
struct McGini {
  double value = 0.0;
  double se = 0.0;
};

inline McGini monte_carlo_gini(const Family& fam, const ParamVector& t, Index draws, Rng& rng) {
  std::vector<double> y(static_cast<size_t>(draws));
  for (auto& v : y) v = fam.sample(t, rng);
  std::sort(y.begin(), y.end());
  const double n = static_cast<double>(draws);
  double total = 0.0, weighted = 0.0;
  for (size_t i = 0; i < y.size(); ++i) {
    total += y[i];
    weighted += static_cast<double>(i + 1) * y[i];
  }
  McGini out;
  out.value = 2.0 * weighted / (n * total) - (n + 1.0) / n;

  constexpr int kBatches = 10;
  std::vector<double> batch(kBatches, 0.0);
  const Index per = draws / kBatches;
  std::vector<double> buf(static_cast<size_t>(per));
  Rng batch_rng = rng;
  double mean_g = 0.0;
  for (int bi = 0; bi < kBatches; ++bi) {
    for (auto& v : buf) v = fam.sample(t, batch_rng);
    std::sort(buf.begin(), buf.end());
    double bt = 0.0, bw = 0.0;
    for (size_t i = 0; i < buf.size(); ++i) {
      bt += buf[i];
      bw += static_cast<double>(i + 1) * buf[i];
    }
    const double np = static_cast<double>(per);
    batch[static_cast<size_t>(bi)] = 2.0 * bw / (np * bt) - (np + 1.0) / np;
    mean_g += batch[static_cast<size_t>(bi)];
  }
  mean_g /= kBatches;
  double ss = 0.0;
  for (double g : batch) ss += (g - mean_g) * (g - mean_g);
  out.se = std::sqrt(ss / (kBatches - 1.0) / kBatches);
  return out;
}

struct DerivedQuantities {
  std::optional<double> mean;
  std::optional<double> sd;
  std::optional<double> gini;
  double gini_mc_se = 0.0;  // nonzero when the Gini came from Monte Carlo
};

/// Whether the family's Gini has a validated closed form (the inverse
/// Gaussian falls back to Monte Carlo).
inline bool gini_closed_form(FamilyId id) { return id != FamilyId::inverse_gaussian; }

/// Conditional mean, standard deviation and Gini coefficient for any of
/// the four families. Monte Carlo is used for the inverse Gaussian Gini
/// (`mc_draws` samples from `rng`, skipped when rng is null).
inline DerivedQuantities family_moments_gini(FamilyId id, const ParamVector& t,
                                             Rng* rng = nullptr, Index mc_draws = 1000000) {
  DerivedQuantities out;
  switch (id) {
    case FamilyId::lognormal: {
      const double mu = t[0], s2 = t[1];
      const double m = std::exp(mu + 0.5 * s2);
      out.mean = m;
      out.sd = m * std::sqrt(std::expm1(s2));
      out.gini = boost::math::erf(std::sqrt(s2) / 2.0);
      break;
    }
    case FamilyId::gamma: {
      const double mu = t[0], sigma = t[1];
      out.mean = mu;
      out.sd = mu / std::sqrt(sigma);
      out.gini = std::exp(lgamma_fn(sigma + 0.5) - lgamma_fn(sigma + 1.0)) / std::sqrt(M_PI);
      break;
    }
    case FamilyId::inverse_gaussian: {
      const double mu = t[0], s2 = t[1];
      out.mean = mu;
      out.sd = std::sqrt(mu * mu * mu * s2);
      if (rng != nullptr) {
        const McGini g = monte_carlo_gini(family(id), t, mc_draws, *rng);
        out.gini = g.value;
        out.gini_mc_se = g.se;
      }
      break;
    }
    case FamilyId::dagum: {
      const Moments m = dagum_moments(t);
      out.mean = m.mean;
      out.sd = m.sd;
      out.gini = dagum_gini(t);
      break;
    }
  }
  return out;
}

/// Function draws over a grid: one row per retained draw.
struct CurveSamples {
  Vector grid;
  Matrix values;  // draws x grid

  Index draws() const { return values.rows(); }
  Index points() const { return values.cols(); }
};

struct Band {
  Vector center;  // pointwise posterior mean
  Vector lower;
  Vector upper;
  std::vector<Index> excluded;  // grid points with zero posterior spread
  double q_star = 0.0;
};

namespace detail {

inline double empirical_quantile(std::vector<double> x, double level) {
  std::sort(x.begin(), x.end());
  const size_t idx = static_cast<size_t>(
      std::min<double>(std::ceil(level * static_cast<double>(x.size())) - 1.0,
                       static_cast<double>(x.size() - 1)));
  return x[std::max<size_t>(idx, 0)];
}

inline void curve_mean_sd(const CurveSamples& c, Vector& mean, Vector& sd) {
  mean = c.values.colwise().mean().transpose();
  sd.resize(c.points());
  for (Index g = 0; g < c.points(); ++g) {
    sd[g] = std::sqrt((c.values.col(g).array() - mean[g]).square().sum() /
                      std::max<double>(1.0, static_cast<double>(c.draws() - 1)));
  }
}

/// Zero posterior spread up to rounding noise.
inline bool degenerate_spread(double sd, double center) {
  return sd <= 1e-12 * (1.0 + std::abs(center));
}

}  // namespace detail

/// Simultaneous credible band by the scaled maximum-deviation method:
/// band = mean +- q* sd with q* the empirical gamma-quantile of the
/// per-draw maximum standardised deviation. Contains at least a gamma
/// fraction of the sampled curves entirely.
inline Band simultaneous_band(const CurveSamples& curves, double gamma = 0.95) {
  if (curves.draws() < 100) throw NumericError("simultaneous band needs at least 100 draws");
  Band band;
  Vector sd;
  detail::curve_mean_sd(curves, band.center, sd);
  std::vector<bool> include(static_cast<size_t>(curves.points()), true);
  for (Index g = 0; g < curves.points(); ++g) {
    if (detail::degenerate_spread(sd[g], band.center[g])) {
      include[static_cast<size_t>(g)] = false;
      sd[g] = 0.0;  // band collapses onto the centre there
      band.excluded.push_back(g);
    }
  }
  std::vector<double> max_dev(static_cast<size_t>(curves.draws()), 0.0);
  for (Index t = 0; t < curves.draws(); ++t) {
    double m = 0.0;
    for (Index g = 0; g < curves.points(); ++g) {
      if (!include[static_cast<size_t>(g)]) continue;
      m = std::max(m, std::abs(curves.values(t, g) - band.center[g]) / sd[g]);
    }
    max_dev[static_cast<size_t>(t)] = m;
  }
  band.q_star = detail::empirical_quantile(max_dev, gamma);
  band.lower = band.center - band.q_star * sd;
  band.upper = band.center + band.q_star * sd;
  return band;
}

/// Pointwise credible band from per-point empirical quantiles of the
/// standardised deviations (symmetric around the pointwise mean, so the
/// simultaneous band always contains it).
inline Band pointwise_band(const CurveSamples& curves, double gamma = 0.95) {
  Band band;
  Vector sd;
  detail::curve_mean_sd(curves, band.center, sd);
  band.lower.resize(curves.points());
  band.upper.resize(curves.points());
  std::vector<double> dev(static_cast<size_t>(curves.draws()));
  for (Index g = 0; g < curves.points(); ++g) {
    if (detail::degenerate_spread(sd[g], band.center[g])) {
      band.excluded.push_back(g);
      band.lower[g] = band.center[g];
      band.upper[g] = band.center[g];
      continue;
    }
    for (Index t = 0; t < curves.draws(); ++t) {
      dev[static_cast<size_t>(t)] = std::abs(curves.values(t, g) - band.center[g]) / sd[g];
    }
    const double q = detail::empirical_quantile(dev, gamma);
    band.lower[g] = band.center[g] - q * sd[g];
    band.upper[g] = band.center[g] + q * sd[g];
  }
  return band;
}

/// Per-draw effect curve of one term over a grid dataset (rows of the
/// term's effective design times the coefficient draws).
inline CurveSamples effect_curve(const PosteriorStore& store, const AssembledModel& model, int k,
                                 int j, const Dataset& grid_data, const Vector& grid,
                                 bool clamp = false) {
  const DesignBlock& block = model.params[static_cast<size_t>(k)][static_cast<size_t>(j)];
  Matrix rows(grid_data.n(), block.dim());
  for (Index i = 0; i < grid_data.n(); ++i) {
    rows.row(i) = block.effective_row(grid_data, i, clamp).transpose();
  }
  CurveSamples out;
  out.grid = grid;
  out.values = store.block_draws(k, j) * rows.transpose();
  return out;
}

/// Default density grid: 512 points between the 0.001 and 0.999
/// quantiles at the plug-in parameters.
inline Vector default_density_grid(FamilyId id, const ParamVector& plugin, Index points = 512) {
  const Family& fam = family(id);
  const double lo = fam.quantile(0.001, plugin);
  const double hi = fam.quantile(0.999, plugin);
  Vector grid(points);
  for (Index i = 0; i < points; ++i) {
    grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  return grid;
}

struct DensityCurve {
  Vector grid;
  Vector posterior_mean;  // average of the per-draw densities
  Vector plugin;          // density at the posterior-mean parameters
  CurveSamples draws;     // per-draw densities for band construction
};

/// Densities at a covariate profile: the posterior mean of the per-draw
/// densities (not the density at the posterior-mean parameters, which
/// is also returned for comparison).
inline DensityCurve posterior_mean_density(const PosteriorStore& store,
                                           const AssembledModel& model, const Dataset& profile,
                                           const Vector& grid, bool clamp = false) {
  const Family& fam = model.fam();
  DensityCurve out;
  out.grid = grid;
  out.draws.grid = grid;
  out.draws.values.resize(store.draw_count(), grid.size());
  std::vector<std::vector<Vector>> coefs(static_cast<size_t>(fam.param_count()));
  for (Index t = 0; t < store.draw_count(); ++t) {
    for (int k = 0; k < fam.param_count(); ++k) coefs[static_cast<size_t>(k)] = store.coefs_at(t, k);
    const ParamVector theta = predict_theta(model, coefs, profile, 0, clamp);
    for (Index g = 0; g < grid.size(); ++g) {
      out.draws.values(t, g) = std::exp(fam.log_density(grid[g], theta));
    }
  }
  out.posterior_mean = out.draws.values.colwise().mean().transpose();
  std::vector<std::vector<Vector>> mean_coefs(static_cast<size_t>(fam.param_count()));
  for (int k = 0; k < fam.param_count(); ++k) mean_coefs[static_cast<size_t>(k)] = store.mean_coefs(k);
  const ParamVector plugin = predict_theta(model, mean_coefs, profile, 0, clamp);
  out.plugin.resize(grid.size());
  for (Index g = 0; g < grid.size(); ++g) {
    out.plugin[g] = std::exp(fam.log_density(grid[g], plugin));
  }
  return out;
}

struct ScalarSummary {
  double mean = 0.0;
  double median = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

/// Posterior mean, median and equal-tailed credible interval of a
/// per-draw scalar quantity.
inline ScalarSummary summarize_scalar(std::vector<double> draws, double gamma = 0.95) {
  if (draws.empty()) throw NumericError("cannot summarise an empty draw vector");
  ScalarSummary s;
  for (double d : draws) s.mean += d;
  s.mean /= static_cast<double>(draws.size());
  std::sort(draws.begin(), draws.end());
  const auto at = [&](double q) {
    const double pos = q * static_cast<double>(draws.size() - 1);
    const size_t lo = static_cast<size_t>(pos);
    const size_t hi = std::min(lo + 1, draws.size() - 1);
    const double w = pos - static_cast<double>(lo);
    return (1.0 - w) * draws[lo] + w * draws[hi];
  };
  s.median = at(0.5);
  s.lower = at(0.5 * (1.0 - gamma));
  s.upper = at(1.0 - 0.5 * (1.0 - gamma));
  return s;
}

}  // namespace distreg
