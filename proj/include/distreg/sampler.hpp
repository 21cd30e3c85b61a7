#pragma once

#include <chrono>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "distreg/design.hpp"
#include "distreg/families.hpp"
#include "distreg/linalg.hpp"
#include "distreg/rng.hpp"

namespace distreg {

struct SamplerConfig {
  int iterations = 12000;
  int burnin = 2000;
  int thin = 10;
  std::uint64_t seed = 0;
  bool random_scan = false;  // fixed sweep is the default
  double init_tau2 = 10.0;
  int audit_interval = 500;

  void validate() const {
    if (iterations <= 0) throw ConfigError("iterations must be positive");
    if (burnin < 0 || burnin >= iterations) throw ConfigError("burn-in must lie in [0, iterations)");
    if (thin < 1) throw ConfigError("thinning must be >= 1");
  }
  Index retained() const { return (iterations - burnin) / thin; }
};

/// Current position of one chain: coefficients, smoothing variances and
/// the cached per-parameter predictors with their response-scale values.
struct ChainState {
  const AssembledModel* model = nullptr;
  const Obs* obs = nullptr;

  std::vector<std::vector<Vector>> beta;  // [param][block]
  std::vector<std::vector<double>> tau2;
  std::vector<Array> eta;  // cached predictors
  ParamArrays theta;       // natural-scale parameters
  double loglik = 0.0;     // cached sum of log densities
  ClampCounter clamp;

  void init(const AssembledModel& m, const Obs& o, double init_tau2) {
    model = &m;
    obs = &o;
    const Family& fam = m.fam();
    const int kk = fam.param_count();
    beta.assign(static_cast<size_t>(kk), {});
    tau2.assign(static_cast<size_t>(kk), {});
    const ParamVector start = fam.moment_init(o.y);
    for (int k = 0; k < kk; ++k) {
      for (const auto& b : m.params[static_cast<size_t>(k)]) {
        Vector coef = Vector::Zero(b.dim());
        if (b.kind == TermKind::intercept) coef[0] = invert_link(fam.link(k), start[k]);
        beta[static_cast<size_t>(k)].push_back(std::move(coef));
        tau2[static_cast<size_t>(k)].push_back(init_tau2);
      }
    }
    refresh();
  }

  void refresh() {
    const Family& fam = model->fam();
    const int kk = fam.param_count();
    eta.assign(static_cast<size_t>(kk), Array());
    theta.count = kk;
    for (int k = 0; k < kk; ++k) {
      Vector e = Vector::Zero(obs->n());
      const auto& blocks = model->params[static_cast<size_t>(k)];
      for (size_t j = 0; j < blocks.size(); ++j) e += blocks[j].contribution(beta[static_cast<size_t>(k)][j]);
      eta[static_cast<size_t>(k)] = e.array();
      apply_link(fam.link(k), eta[static_cast<size_t>(k)], theta.col[static_cast<size_t>(k)], &clamp);
    }
    loglik = fam.log_density_sum(*obs, theta);
  }

  /// Recompute predictors from scratch and return the largest deviation
  /// from the incrementally maintained cache; the cache is then resynced.
  double audit_and_resync() {
    double max_diff = 0.0;
    const Family& fam = model->fam();
    for (int k = 0; k < fam.param_count(); ++k) {
      Vector e = Vector::Zero(obs->n());
      const auto& blocks = model->params[static_cast<size_t>(k)];
      for (size_t j = 0; j < blocks.size(); ++j) e += blocks[j].contribution(beta[static_cast<size_t>(k)][j]);
      max_diff = std::max(max_diff, (e.array() - eta[static_cast<size_t>(k)]).abs().maxCoeff());
      eta[static_cast<size_t>(k)] = e.array();
      apply_link(fam.link(k), eta[static_cast<size_t>(k)], theta.col[static_cast<size_t>(k)], &clamp);
    }
    loglik = fam.log_density_sum(*obs, theta);
    return max_diff;
  }
};

/// IWLS proposal parameters for one block at the current state:
/// P = Z'WZ + K/tau2 (factorised into `solver`) and mean
/// mu = P^{-1} Z'W(z - eta_minus_j). Returns false when the
/// factorisation fails even after the ridge retry.
inline bool iwls_params(ChainState& s, int k, int j, PrecisionSolver& solver, Vector& mu,
                        bool* jittered = nullptr) {
  const Family& fam = s.model->fam();
  const DesignBlock& block = s.model->params[static_cast<size_t>(k)][static_cast<size_t>(j)];
  Array v, w;
  fam.score_weight(*s.obs, s.theta, k, v, w);
  Matrix p = block.gram(w);
  // working response z = eta + W^{-1} v gives Z'W(z - eta_{-j}) = Z'v + Z'WZ beta_j
  Vector rhs = block.design_t(Vector(v.matrix())) + p * s.beta[static_cast<size_t>(k)][static_cast<size_t>(j)];
  if (!block.flat) p += block.K / s.tau2[static_cast<size_t>(k)][static_cast<size_t>(j)];
  if (!solver.try_factorize_jittered(p, jittered)) return false;
  mu = solver.solve(rhs);
  return true;
}

/// Everything mh_accept needs: the draw, both proposal log densities and
/// the proposed predictor/parameter/likelihood state.
struct ProposalBundle {
  bool aborted = false;
  bool jittered = false;
  Vector beta_star;
  double logq_forward = 0.0;
  double logq_reverse = 0.0;
  Vector mu_forward;
  Array eta_star;
  Array theta_star;
};

/// Draw a proposal for block (k, j) from the IWLS approximation at the
/// current state, then rebuild the approximation at the proposed state
/// for the reverse density of the asymmetric MH ratio. An optional
/// injected noise vector replaces the standard normal draw (tests use
/// zero noise to land exactly on the mean).
inline ProposalBundle iwls_propose(ChainState& s, int k, int j, PrecisionSolver& forward,
                                   PrecisionSolver& reverse, Rng& rng,
                                   const Vector* injected_noise = nullptr) {
  ProposalBundle out;
  const Family& fam = s.model->fam();
  const DesignBlock& block = s.model->params[static_cast<size_t>(k)][static_cast<size_t>(j)];
  Vector& beta = s.beta[static_cast<size_t>(k)][static_cast<size_t>(j)];

  Vector mu;
  bool jittered = false;
  if (!iwls_params(s, k, j, forward, mu, &jittered)) {
    out.aborted = true;
    return out;
  }
  out.jittered = jittered;
  out.mu_forward = mu;

  Vector z(beta.size());
  if (injected_noise != nullptr) {
    z = *injected_noise;
  } else {
    for (Index i = 0; i < z.size(); ++i) z[i] = draw_normal(rng);
  }
  out.beta_star = forward.sample(mu, z);
  out.logq_forward = mvn_logdensity(out.beta_star, mu, forward);

  // move the cached state to the proposal, recompute the approximation
  out.eta_star = s.eta[static_cast<size_t>(k)] +
                 block.contribution(out.beta_star - beta).array();
  apply_link(fam.link(k), out.eta_star, out.theta_star, &s.clamp);

  std::swap(beta, out.beta_star);  // beta_star now holds the current coefficients
  s.eta[static_cast<size_t>(k)].swap(out.eta_star);
  s.theta.col[static_cast<size_t>(k)].swap(out.theta_star);

  Vector mu_rev;
  const bool rev_ok = iwls_params(s, k, j, reverse, mu_rev, &jittered);
  out.jittered = out.jittered || jittered;
  if (rev_ok) out.logq_reverse = mvn_logdensity(out.beta_star, mu_rev, reverse);

  // restore the current state; the bundle keeps the proposed quantities
  std::swap(beta, out.beta_star);
  s.eta[static_cast<size_t>(k)].swap(out.eta_star);
  s.theta.col[static_cast<size_t>(k)].swap(out.theta_star);
  if (!rev_ok) out.aborted = true;
  return out;
}

struct AcceptResult {
  bool accepted = false;
  double log_alpha = -std::numeric_limits<double>::infinity();
};

/// Metropolis-Hastings decision for an IWLS proposal. The prior enters
/// as the penalty quadratic form only: the rank-deficient Gaussian
/// normalisation is constant within a block at fixed tau2.
inline AcceptResult mh_accept(ChainState& s, int k, int j, ProposalBundle& b, Rng& rng) {
  AcceptResult res;
  if (b.aborted) return res;  // failed factorisation counts as a rejection
  const Family& fam = s.model->fam();
  const DesignBlock& block = s.model->params[static_cast<size_t>(k)][static_cast<size_t>(j)];
  Vector& beta = s.beta[static_cast<size_t>(k)][static_cast<size_t>(j)];
  const double tau2 = s.tau2[static_cast<size_t>(k)][static_cast<size_t>(j)];

  s.theta.col[static_cast<size_t>(k)].swap(b.theta_star);
  const double loglik_star = fam.log_density_sum(*s.obs, s.theta);
  s.theta.col[static_cast<size_t>(k)].swap(b.theta_star);

  if (!std::isfinite(loglik_star)) return res;  // auto-reject

  const double logprior_star = block.flat ? 0.0 : -0.5 * block.penalty_quadform(b.beta_star) / tau2;
  const double logprior_cur = block.flat ? 0.0 : -0.5 * block.penalty_quadform(beta) / tau2;
  res.log_alpha = (loglik_star + logprior_star + b.logq_reverse) -
                  (s.loglik + logprior_cur + b.logq_forward);

  if (res.log_alpha >= 0.0 || std::log(draw_uniform(rng)) < res.log_alpha) {
    res.accepted = true;
    beta = b.beta_star;
    s.eta[static_cast<size_t>(k)].swap(b.eta_star);
    s.theta.col[static_cast<size_t>(k)].swap(b.theta_star);
    s.loglik = loglik_star;
  }
  return res;
}

/// Conjugate inverse-gamma update parameters for a smoothing variance.
inline std::pair<double, double> gibbs_variance_params(const Vector& beta, const Matrix& K,
                                                       double rank, double a, double b) {
  return {0.5 * rank + a, 0.5 * beta.dot(K * beta) + b};
}

/// Exact Gibbs draw tau2 | beta ~ IG(rk(K)/2 + a, beta'K beta/2 + b).
inline double gibbs_variance(const Vector& beta, const Matrix& K, double rank, double a, double b,
                             Rng& rng) {
  const auto [a_post, b_post] = gibbs_variance_params(beta, K, rank, a, b);
  return draw_inverse_gamma(rng, a_post, b_post);
}

struct BlockStats {
  std::string label;
  std::int64_t attempts = 0;
  std::int64_t accepts = 0;
  std::int64_t aborts = 0;
  std::int64_t jitters = 0;
  double rate() const { return attempts > 0 ? static_cast<double>(accepts) / attempts : 0.0; }
};

struct RunReport {
  std::string family;
  std::uint64_t seed = 0;
  int iterations = 0, burnin = 0, thin = 0;
  Index retained = 0;
  std::vector<BlockStats> blocks;
  std::uint64_t clamp_events = 0;
  double eta_audit_max = 0.0;
  double wall_seconds = 0.0;
};

/// Thinned retained draws: one column per scalar coefficient plus one
/// column per smoothing variance, with block-labelled headers.
class PosteriorStore {
public:
  PosteriorStore() = default;

  static PosteriorStore with_layout(const AssembledModel& model) {
    PosteriorStore s;
    const Family& fam = model.fam();
    Index offset = 0;
    s.coef_.resize(model.params.size());
    s.tau_.resize(model.params.size());
    for (size_t k = 0; k < model.params.size(); ++k) {
      for (const auto& b : model.params[k]) {
        s.coef_[k].push_back({offset, b.dim()});
        for (Index i = 0; i < b.dim(); ++i) {
          s.labels_.push_back(std::string(fam.param_name(static_cast<int>(k))) + "." + b.label +
                              "[" + std::to_string(i) + "]");
        }
        offset += b.dim();
        s.tau_[k].push_back(-1);
      }
    }
    for (size_t k = 0; k < model.params.size(); ++k) {
      for (size_t j = 0; j < model.params[k].size(); ++j) {
        if (model.params[k][j].flat) continue;
        s.tau_[k][j] = offset++;
        s.labels_.push_back("tau2." + std::string(fam.param_name(static_cast<int>(k))) + "." +
                            model.params[k][j].label);
      }
    }
    s.total_ = offset;
    return s;
  }

  void reserve(Index draws) { draws_.resize(draws, total_); }

  void record(Index row, const ChainState& s) {
    for (size_t k = 0; k < coef_.size(); ++k) {
      for (size_t j = 0; j < coef_[k].size(); ++j) {
        const auto [off, dim] = coef_[k][j];
        draws_.row(row).segment(off, dim) = s.beta[k][j].transpose();
        if (tau_[k][j] >= 0) draws_(row, tau_[k][j]) = s.tau2[k][j];
      }
    }
  }

  Index draw_count() const { return draws_.rows(); }
  Index column_count() const { return total_; }
  const Matrix& draws() const { return draws_; }
  Matrix& mutable_draws() { return draws_; }
  const std::vector<std::string>& labels() const { return labels_; }

  Vector block_coef(Index draw, int k, int j) const {
    const auto [off, dim] = coef_[static_cast<size_t>(k)][static_cast<size_t>(j)];
    return draws_.row(draw).segment(off, dim).transpose();
  }

  Matrix block_draws(int k, int j) const {
    const auto [off, dim] = coef_[static_cast<size_t>(k)][static_cast<size_t>(j)];
    return draws_.middleCols(off, dim);
  }

  Vector mean_block_coef(int k, int j) const {
    const auto [off, dim] = coef_[static_cast<size_t>(k)][static_cast<size_t>(j)];
    return draws_.middleCols(off, dim).colwise().mean().transpose();
  }

  double tau2(Index draw, int k, int j) const {
    const Index col = tau_[static_cast<size_t>(k)][static_cast<size_t>(j)];
    if (col < 0) throw NumericError("block has a flat prior and no smoothing variance");
    return draws_(draw, col);
  }

  std::vector<Vector> coefs_at(Index draw, int k) const {
    std::vector<Vector> out;
    for (size_t j = 0; j < coef_[static_cast<size_t>(k)].size(); ++j) {
      out.push_back(block_coef(draw, k, static_cast<int>(j)));
    }
    return out;
  }

  std::vector<Vector> mean_coefs(int k) const {
    std::vector<Vector> out;
    for (size_t j = 0; j < coef_[static_cast<size_t>(k)].size(); ++j) {
      out.push_back(mean_block_coef(k, static_cast<int>(j)));
    }
    return out;
  }

private:
  std::vector<std::vector<std::pair<Index, Index>>> coef_;  // per (param, block)
  std::vector<std::vector<Index>> tau_;                     // tau2 column or -1
  std::vector<std::string> labels_;
  Index total_ = 0;
  Matrix draws_;
};

struct ChainResult {
  PosteriorStore store;
  RunReport report;
};

/// Blockwise MH with IWLS proposals over every coefficient block of
/// every distribution parameter, followed by conjugate smoothing
/// variance updates. Deterministic given the seed.
inline ChainResult run_chain(const AssembledModel& model, const Obs& obs,
                             const SamplerConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const Family& fam = model.fam();
  const int kk = fam.param_count();

  ChainState state;
  state.init(model, obs, cfg.init_tau2);
  if (!std::isfinite(state.loglik)) {
    throw NumericError("log likelihood not finite at the initial state");
  }

  Rng rng = make_rng(cfg.seed);

  std::vector<std::pair<int, int>> sweep;
  for (int k = 0; k < kk; ++k) {
    for (size_t j = 0; j < model.params[static_cast<size_t>(k)].size(); ++j) {
      sweep.emplace_back(k, static_cast<int>(j));
    }
  }

  // one persistent solver pair per block keeps the symbolic analysis cached
  std::vector<std::unique_ptr<PrecisionSolver>> fwd, rev;
  for (size_t i = 0; i < sweep.size(); ++i) {
    fwd.push_back(std::make_unique<PrecisionSolver>());
    rev.push_back(std::make_unique<PrecisionSolver>());
  }

  ChainResult result;
  result.store = PosteriorStore::with_layout(model);
  result.store.reserve(cfg.retained());
  RunReport& report = result.report;
  report.family = std::string(fam.name());
  report.seed = cfg.seed;
  report.iterations = cfg.iterations;
  report.burnin = cfg.burnin;
  report.thin = cfg.thin;
  report.retained = cfg.retained();
  for (const auto& [k, j] : sweep) {
    report.blocks.push_back(
        {std::string(fam.param_name(k)) + "." + model.params[static_cast<size_t>(k)][static_cast<size_t>(j)].label});
  }
  std::vector<std::int64_t> window_aborts(sweep.size(), 0);
  constexpr int kAbortWindow = 200;

  Index row = 0;
  std::vector<size_t> order(sweep.size());
  std::iota(order.begin(), order.end(), 0);

  for (int iter = 1; iter <= cfg.iterations; ++iter) {
    if (cfg.random_scan) std::shuffle(order.begin(), order.end(), rng);
    for (size_t oi = 0; oi < order.size(); ++oi) {
      const size_t idx = order[oi];
      const auto [k, j] = sweep[idx];
      ProposalBundle bundle = iwls_propose(state, k, j, *fwd[idx], *rev[idx], rng);
      const AcceptResult acc = mh_accept(state, k, j, bundle, rng);
      auto& stats = report.blocks[idx];
      ++stats.attempts;
      if (acc.accepted) ++stats.accepts;
      if (bundle.aborted) {
        ++stats.aborts;
        ++window_aborts[idx];
      }
      if (bundle.jittered) ++stats.jitters;
    }
    for (int k = 0; k < kk; ++k) {
      const auto& blocks = model.params[static_cast<size_t>(k)];
      for (size_t j = 0; j < blocks.size(); ++j) {
        if (blocks[j].flat) continue;
        state.tau2[static_cast<size_t>(k)][j] =
            gibbs_variance(state.beta[static_cast<size_t>(k)][j], blocks[j].K, blocks[j].rank_K,
                           blocks[j].hyper_a, blocks[j].hyper_b, rng);
      }
    }

    if (iter % kAbortWindow == 0) {
      for (size_t idx = 0; idx < sweep.size(); ++idx) {
        if (window_aborts[idx] > kAbortWindow / 2) {
          throw NumericError("block " + report.blocks[idx].label + " aborted " +
                             std::to_string(window_aborts[idx]) + " proposals in the last " +
                             std::to_string(kAbortWindow) + " iterations");
        }
        window_aborts[idx] = 0;
      }
    }
    if (iter % cfg.audit_interval == 0) {
      report.eta_audit_max = std::max(report.eta_audit_max, state.audit_and_resync());
    }

    if (iter > cfg.burnin && (iter - cfg.burnin) % cfg.thin == 0) {
      result.store.record(row++, state);
    }
  }
  report.eta_audit_max = std::max(report.eta_audit_max, state.audit_and_resync());
  report.clamp_events = state.clamp.events;
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

/// Natural-scale parameters for the training data at one retained draw.
inline ParamArrays theta_for_draw(const AssembledModel& model, const PosteriorStore& store,
                                  Index draw) {
  const Family& fam = model.fam();
  ParamArrays t;
  t.count = fam.param_count();
  for (int k = 0; k < t.count; ++k) {
    Vector e = Vector::Zero(model.n);
    const auto& blocks = model.params[static_cast<size_t>(k)];
    for (size_t j = 0; j < blocks.size(); ++j) {
      e += blocks[j].contribution(store.block_coef(draw, k, static_cast<int>(j)));
    }
    Array ea = e.array();
    apply_link(fam.link(k), ea, t.col[static_cast<size_t>(k)]);
  }
  return t;
}

/// Same at the posterior mean of the coefficients.
inline ParamArrays theta_at_mean(const AssembledModel& model, const PosteriorStore& store) {
  const Family& fam = model.fam();
  ParamArrays t;
  t.count = fam.param_count();
  for (int k = 0; k < t.count; ++k) {
    Vector e = Vector::Zero(model.n);
    const auto& blocks = model.params[static_cast<size_t>(k)];
    for (size_t j = 0; j < blocks.size(); ++j) {
      e += blocks[j].contribution(store.mean_block_coef(k, static_cast<int>(j)));
    }
    Array ea = e.array();
    apply_link(fam.link(k), ea, t.col[static_cast<size_t>(k)]);
  }
  return t;
}

/// Predicted parameters for new data given per-block coefficients;
/// throws ExtrapolationError for observations outside the training
/// support unless clamp is set.
inline ParamVector predict_theta(const AssembledModel& model,
                                 const std::vector<std::vector<Vector>>& coefs,
                                 const Dataset& data, Index row, bool clamp = false) {
  const Family& fam = model.fam();
  ParamVector t;
  if (fam.param_count() == 2) t = ParamVector(0.0, 0.0);
  if (fam.param_count() == 3) t = ParamVector(0.0, 0.0, 0.0);
  for (int k = 0; k < fam.param_count(); ++k) {
    const double eta = predict_eta(model.params[static_cast<size_t>(k)], coefs[static_cast<size_t>(k)], data, row, clamp);
    t[k] = apply_link(fam.link(k), eta);
  }
  return t;
}

}  // namespace distreg
