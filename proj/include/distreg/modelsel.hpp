#pragma once

#include <mutex>
#include <optional>

#include "distreg/parallel.hpp"
#include "distreg/quadrature.hpp"
#include "distreg/sampler.hpp"

namespace distreg {

struct DicResult {
  double dic = 0.0;
  double pd = 0.0;
  double mean_deviance = 0.0;
};

/// Deviance information criterion from the retained draws:
/// 2 mean D(theta) - D(mean theta), with the posterior mean taken over
/// the coefficient draws and mapped through predictors and response
/// functions.
inline DicResult dic(const PosteriorStore& store, const AssembledModel& model, const Obs& obs) {
  if (store.draw_count() < 2) throw NumericError("DIC needs at least two retained draws");
  const Family& fam = model.fam();
  double mean_dev = 0.0;
  for (Index t = 0; t < store.draw_count(); ++t) {
    const ParamArrays theta = theta_for_draw(model, store, t);
    mean_dev += -2.0 * fam.log_density_sum(obs, theta);
  }
  mean_dev /= static_cast<double>(store.draw_count());

  const ParamArrays theta_bar = theta_at_mean(model, store);
  double dev_at_mean = 0.0;
  for (Index i = 0; i < obs.n(); ++i) {
    const double l = fam.log_density(obs.y[i], theta_bar.at(i));
    if (!std::isfinite(l)) {
      throw NumericError("deviance at the posterior mean is not finite at observation " +
                         std::to_string(i));
    }
    dev_at_mean += -2.0 * l;
  }
  DicResult r;
  r.mean_deviance = mean_dev;
  r.pd = mean_dev - dev_at_mean;
  r.dic = mean_dev + r.pd;
  return r;
}

/// A fitted predictive distribution for one observation.
struct Predictive {
  FamilyId family = FamilyId::lognormal;
  ParamVector theta;
};

/// Fitted parameters and observed responses for a hold-out (or the
/// training) set.
struct PredictiveSet {
  FamilyId family = FamilyId::lognormal;
  std::vector<ParamVector> theta;
  Vector y;

  Index n() const { return y.size(); }
  Predictive at(Index i) const { return {family, theta[static_cast<size_t>(i)]}; }
};

/// Fitted parameters at the posterior mean coefficients, on the
/// training data.
inline PredictiveSet fitted_set(const AssembledModel& model, const PosteriorStore& store,
                                const Obs& obs) {
  PredictiveSet out;
  out.family = model.family;
  out.y = obs.y.matrix();
  const ParamArrays t = theta_at_mean(model, store);
  out.theta.reserve(static_cast<size_t>(obs.n()));
  for (Index i = 0; i < obs.n(); ++i) out.theta.push_back(t.at(i));
  return out;
}

inline constexpr double kPitClamp = 1e-12;

struct PitResult {
  Vector values;
  Index clamp_count = 0;
};

/// Probability integral transform u_i = F(y_i | theta_i), clamped away
/// from 0 and 1 so the normal quantile stays finite.
inline PitResult pit_values(const PredictiveSet& fit) {
  const Family& fam = family(fit.family);
  PitResult out;
  out.values.resize(fit.n());
  for (Index i = 0; i < fit.n(); ++i) {
    double u = fam.cdf(fit.y[i], fit.theta[static_cast<size_t>(i)]);
    if (u < kPitClamp) {
      u = kPitClamp;
      ++out.clamp_count;
    } else if (u > 1.0 - kPitClamp) {
      u = 1.0 - kPitClamp;
      ++out.clamp_count;
    }
    out.values[i] = u;
  }
  return out;
}

struct ResidualResult {
  Vector residuals;
  Index clamp_count = 0;
};

/// Quantile residuals Phi^{-1}(F(y_i | theta_i)); standard normal under
/// a correctly specified model.
inline ResidualResult quantile_residuals(const PredictiveSet& fit) {
  const PitResult pit = pit_values(fit);
  ResidualResult out;
  out.clamp_count = pit.clamp_count;
  out.residuals.resize(pit.values.size());
  for (Index i = 0; i < pit.values.size(); ++i) out.residuals[i] = norm_quantile(pit.values[i]);
  return out;
}

/// Sorted (theoretical, observed) residual pairs for a QQ plot.
inline Matrix qq_pairs(const ResidualResult& res) {
  std::vector<double> sorted(res.residuals.data(), res.residuals.data() + res.residuals.size());
  std::sort(sorted.begin(), sorted.end());
  const Index n = static_cast<Index>(sorted.size());
  Matrix out(n, 2);
  for (Index i = 0; i < n; ++i) {
    out(i, 0) = norm_quantile((static_cast<double>(i) + 0.5) / static_cast<double>(n));
    out(i, 1) = sorted[static_cast<size_t>(i)];
  }
  return out;
}

inline double score_log(const Predictive& p, double y) {
  return family(p.family).log_density(y, p.theta);
}

inline double score_quadratic(const Predictive& p, double y) {
  const Family& fam = family(p.family);
  return 2.0 * std::exp(fam.log_density(y, p.theta)) - fam.sq_density_integral(p.theta);
}

inline double score_spherical(const Predictive& p, double y) {
  const Family& fam = family(p.family);
  return std::exp(fam.log_density(y, p.theta)) / std::sqrt(fam.sq_density_integral(p.theta));
}

namespace detail {

/// The CRPS integrals diverge when the predictive tail is too heavy
/// (Dagum with a <= 1/2); fail loudly instead of returning quadrature
/// noise.
inline void check_crps_integrable(const Predictive& p) {
  if (p.family == FamilyId::dagum && p.theta[0] <= 0.5) {
    throw NumericError("CRPS diverges for Dagum tail index a <= 1/2");
  }
}

}  // namespace detail

/// Continuous ranked probability score in its cdf form,
/// -int (F(y) - 1{y >= y_new})^2 dy, split at the observation.
inline double score_crps(const Predictive& p, double y) {
  detail::check_crps_integrable(p);
  const Family& fam = family(p.family);
  const auto& t = p.theta;
  const double lower = integrate([&](double u) { const double f = fam.cdf(u, t); return f * f; },
                                 0.0, y, 1e-9);
  const double upper =
      integrate([&](double u) { const double f = fam.ccdf(u, t); return f * f; }, y,
                std::numeric_limits<double>::infinity(), 1e-9);
  return -(lower + upper);
}

/// Per-quantile-level contributions -2 (1{y <= q_a} - a)(q_a - y) on the
/// fixed Gauss-Legendre grid; their weighted sum is the quantile-form
/// CRPS.
inline Vector crps_alpha_contributions(const Predictive& p, double y,
                                       const GaussLegendre& rule = quantile_rule()) {
  detail::check_crps_integrable(p);
  const Family& fam = family(p.family);
  Vector out(static_cast<Index>(rule.nodes.size()));
  for (size_t i = 0; i < rule.nodes.size(); ++i) {
    const double alpha = rule.nodes[i];
    const double q = fam.quantile(alpha, p.theta);
    const double indicator = (y <= q) ? 1.0 : 0.0;
    out[static_cast<Index>(i)] = -2.0 * (indicator - alpha) * (q - y);
  }
  return out;
}

/// Quantile-form CRPS on the fixed 256-node rule.
inline double score_crps_quantile(const Predictive& p, double y,
                                  const GaussLegendre& rule = quantile_rule()) {
  const Vector contrib = crps_alpha_contributions(p, y, rule);
  double s = 0.0;
  for (size_t i = 0; i < rule.weights.size(); ++i) {
    s += rule.weights[i] * contrib[static_cast<Index>(i)];
  }
  return s;
}

/// Averages of the four proper scores over a predictive set, with
/// per-score exclusion accounting.
struct ScoreRow {
  std::string label;
  double ls = 0.0, qs = 0.0, sps = 0.0, crps = 0.0;
  Index n_ls = 0, n_density = 0, n_crps = 0;
  Index excluded_extrapolation = 0;
  Index excluded_divergent = 0;
};

struct CrpsCurve {
  Vector alpha;
  Vector mean_contribution;
  Index count = 0;

  /// Integral of the curve over the quantile levels (recovers the
  /// average CRPS).
  double integral(const GaussLegendre& rule = quantile_rule()) const {
    double s = 0.0;
    for (size_t i = 0; i < rule.weights.size(); ++i) {
      s += rule.weights[i] * mean_contribution[static_cast<Index>(i)];
    }
    return s;
  }
};

/// Score every observation of a predictive set; divergent densities are
/// excluded per score with a count.
inline ScoreRow score_set(const PredictiveSet& fit, CrpsCurve* curve = nullptr) {
  ScoreRow row;
  const GaussLegendre& rule = quantile_rule();
  Vector alpha_sum = Vector::Zero(static_cast<Index>(rule.nodes.size()));
  for (Index i = 0; i < fit.n(); ++i) {
    const Predictive p = fit.at(i);
    row.ls += score_log(p, fit.y[i]);
    ++row.n_ls;
    try {
      const double qs = score_quadratic(p, fit.y[i]);
      row.qs += qs;
      row.sps += score_spherical(p, fit.y[i]);
      ++row.n_density;
    } catch (const NumericError&) {
      ++row.excluded_divergent;
    }
    try {
      const Vector contrib = crps_alpha_contributions(p, fit.y[i], rule);
      double c = 0.0;
      for (size_t a = 0; a < rule.weights.size(); ++a) {
        c += rule.weights[a] * contrib[static_cast<Index>(a)];
      }
      row.crps += c;
      alpha_sum += contrib;
      ++row.n_crps;
    } catch (const NumericError&) {
      ++row.excluded_divergent;
    }
  }
  if (row.n_ls > 0) row.ls /= static_cast<double>(row.n_ls);
  if (row.n_density > 0) {
    row.qs /= static_cast<double>(row.n_density);
    row.sps /= static_cast<double>(row.n_density);
  }
  if (row.n_crps > 0) row.crps /= static_cast<double>(row.n_crps);
  if (curve != nullptr) {
    curve->alpha.resize(static_cast<Index>(rule.nodes.size()));
    for (size_t i = 0; i < rule.nodes.size(); ++i) {
      curve->alpha[static_cast<Index>(i)] = rule.nodes[i];
    }
    curve->mean_contribution =
        row.n_crps > 0 ? Vector(alpha_sum / static_cast<double>(row.n_crps)) : alpha_sum;
    curve->count = row.n_crps;
  }
  return row;
}

struct ScoreReport {
  std::vector<ScoreRow> folds;
  ScoreRow fold_mean;  // average of the fold averages
  ScoreRow pooled;     // pooled over observations
  CrpsCurve crps_curve;
};

namespace detail {

inline ScoreRow average_rows(const std::vector<ScoreRow>& rows) {
  ScoreRow out;
  out.label = "overall";
  Index with_ls = 0, with_density = 0, with_crps = 0;
  for (const auto& r : rows) {
    if (r.n_ls > 0) {
      out.ls += r.ls;
      ++with_ls;
    }
    if (r.n_density > 0) {
      out.qs += r.qs;
      out.sps += r.sps;
      ++with_density;
    }
    if (r.n_crps > 0) {
      out.crps += r.crps;
      ++with_crps;
    }
    out.n_ls += r.n_ls;
    out.n_density += r.n_density;
    out.n_crps += r.n_crps;
    out.excluded_extrapolation += r.excluded_extrapolation;
    out.excluded_divergent += r.excluded_divergent;
  }
  if (with_ls > 0) out.ls /= with_ls;
  if (with_density > 0) {
    out.qs /= with_density;
    out.sps /= with_density;
  }
  if (with_crps > 0) out.crps /= with_crps;
  return out;
}

inline ScoreRow pool_rows(const std::vector<ScoreRow>& rows) {
  ScoreRow out;
  out.label = "pooled";
  for (const auto& r : rows) {
    out.ls += r.ls * static_cast<double>(r.n_ls);
    out.qs += r.qs * static_cast<double>(r.n_density);
    out.sps += r.sps * static_cast<double>(r.n_density);
    out.crps += r.crps * static_cast<double>(r.n_crps);
    out.n_ls += r.n_ls;
    out.n_density += r.n_density;
    out.n_crps += r.n_crps;
    out.excluded_extrapolation += r.excluded_extrapolation;
    out.excluded_divergent += r.excluded_divergent;
  }
  if (out.n_ls > 0) out.ls /= static_cast<double>(out.n_ls);
  if (out.n_density > 0) {
    out.qs /= static_cast<double>(out.n_density);
    out.sps /= static_cast<double>(out.n_density);
  }
  if (out.n_crps > 0) out.crps /= static_cast<double>(out.n_crps);
  return out;
}

}  // namespace detail

/// Random fold assignment from the seeded generator: a shuffled index
/// vector dealt round-robin into near-equal folds.
inline std::vector<std::vector<Index>> assign_folds(Index n, int folds, std::uint64_t seed) {
  if (folds < 2) throw ConfigError("cross-validation needs at least two folds");
  if (n < folds) throw ConfigError("cross-validation needs n >= folds");
  std::vector<Index> idx(static_cast<size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng = make_rng(seed, 0xF01D);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<std::vector<Index>> out(static_cast<size_t>(folds));
  for (size_t i = 0; i < idx.size(); ++i) out[i % static_cast<size_t>(folds)].push_back(idx[i]);
  return out;
}

/// k-fold cross-validation: fit a fresh chain on each complement,
/// predict the held-out parameters as posterior means, and score all
/// four rules. Held-out observations outside the training support are
/// excluded with a count. Folds run in parallel across `workers`.
inline ScoreReport cross_validate(const ModelSpec& spec, const Dataset& data,
                                  const std::string& response, int folds,
                                  const SamplerConfig& base_cfg, const AdjacencyMap* adj = nullptr,
                                  int workers = 1) {
  const auto assignment = assign_folds(data.n(), folds, base_cfg.seed);
  ScoreReport report;
  report.folds.resize(static_cast<size_t>(folds));
  std::vector<CrpsCurve> curves(static_cast<size_t>(folds));

  parallel_for(folds, workers, [&](int f) {
    const auto& test_rows = assignment[static_cast<size_t>(f)];
    std::vector<Index> train_rows;
    for (int other = 0; other < folds; ++other) {
      if (other == f) continue;
      train_rows.insert(train_rows.end(), assignment[static_cast<size_t>(other)].begin(),
                        assignment[static_cast<size_t>(other)].end());
    }
    std::sort(train_rows.begin(), train_rows.end());
    const Dataset train = data.subset(train_rows);
    const Dataset test = data.subset(std::vector<Index>(test_rows.begin(), test_rows.end()));

    const AssembledModel model = assemble_predictors(spec, train, adj);
    SamplerConfig cfg = base_cfg;
    cfg.seed = mix_seed(base_cfg.seed, static_cast<std::uint64_t>(f) + 1);
    const ChainResult fit = run_chain(model, Obs{train.real(response).array()}, cfg);

    PredictiveSet set;
    set.family = spec.family;
    std::vector<double> kept_y;
    Index excluded = 0;
    std::vector<std::vector<Vector>> coefs;
    for (int k = 0; k < model.fam().param_count(); ++k) coefs.push_back(fit.store.mean_coefs(k));
    for (Index i = 0; i < test.n(); ++i) {
      try {
        set.theta.push_back(predict_theta(model, coefs, test, i, false));
        kept_y.push_back(test.real(response)[i]);
      } catch (const ExtrapolationError&) {
        ++excluded;
      }
    }
    set.y = Eigen::Map<const Vector>(kept_y.data(), static_cast<Index>(kept_y.size()));
    ScoreRow row = score_set(set, &curves[static_cast<size_t>(f)]);
    row.label = "fold" + std::to_string(f);
    row.excluded_extrapolation = excluded;
    report.folds[static_cast<size_t>(f)] = std::move(row);
  });

  report.fold_mean = detail::average_rows(report.folds);
  report.pooled = detail::pool_rows(report.folds);
  // pooled alpha curve across folds
  Index total = 0;
  for (const auto& c : curves) total += c.count;
  if (total > 0) {
    Vector sum = Vector::Zero(curves[0].mean_contribution.size());
    for (const auto& c : curves) {
      if (c.count > 0) sum += c.mean_contribution * static_cast<double>(c.count);
    }
    report.crps_curve.alpha = curves[0].alpha;
    report.crps_curve.mean_contribution = sum / static_cast<double>(total);
    report.crps_curve.count = total;
  }
  return report;
}

}  // namespace distreg
