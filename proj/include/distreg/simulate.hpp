#pragma once

#include "distreg/config.hpp"
#include "distreg/derived.hpp"
#include "distreg/modelsel.hpp"
#include "distreg/parallel.hpp"

namespace distreg {

struct CandidateResult {
  FamilyId candidate = FamilyId::lognormal;
  bool ok = false;
  std::string error;
  double dic = 0.0;
  double pd = 0.0;
  double holdout_ls = std::numeric_limits<double>::quiet_NaN();
  Index holdout_n = 0;
  Index holdout_excluded = 0;
};

struct ReplicateResult {
  int replicate = 0;
  std::vector<CandidateResult> candidates;
  int dic_winner = -1;       // index into candidates
  int ls_winner = -1;        // index into candidates (holdout log score)
  double smooth_rmse = std::numeric_limits<double>::quiet_NaN();
  double smooth_coverage = std::numeric_limits<double>::quiet_NaN();
};

struct SimulationReport {
  std::vector<ReplicateResult> replicates;
  int dic_correct = 0;  // replicates where the true family wins on DIC
  int ls_correct = 0;   // replicates where it wins on hold-out LS
  int completed = 0;
  double mean_rmse = std::numeric_limits<double>::quiet_NaN();
  double mean_coverage = std::numeric_limits<double>::quiet_NaN();
};

namespace simdetail {

struct GeneratedData {
  Dataset data;
  Array y;
  std::vector<Index> train_rows;
  std::vector<Index> holdout_rows;
};

inline GeneratedData generate(const ScenarioConfig& sc, std::uint64_t seed) {
  Rng rng = make_rng(seed, 0xDA7A);
  GeneratedData out;
  std::map<std::string, Vector> cols;
  for (const auto& g : sc.covariates) {
    Vector v(sc.n);
    for (Index i = 0; i < sc.n; ++i) {
      v[i] = g.kind == CovariateGen::Kind::uniform ? draw_uniform(rng)
                                                   : (draw_uniform(rng) < 0.5 ? -1.0 : 1.0);
    }
    out.data.add_real(g.name, v);
    cols[g.name] = v;
  }
  const Family& fam = family(sc.family);
  ParamArrays theta;
  theta.count = fam.param_count();
  for (int k = 0; k < fam.param_count(); ++k) {
    Array eta = Array::Zero(sc.n);
    for (const auto& f : sc.truth[static_cast<size_t>(k)]) {
      if (f.kind == TrueFun::Kind::constant) {
        eta += f.value;
      } else {
        auto it = cols.find(f.col);
        if (it == cols.end()) {
          throw ConfigError("truth function references unknown covariate '" + f.col + "'");
        }
        for (Index i = 0; i < sc.n; ++i) eta[i] += f.eval(it->second[i]);
      }
    }
    apply_link(fam.link(k), eta, theta.col[static_cast<size_t>(k)]);
  }
  out.y.resize(sc.n);
  for (Index i = 0; i < sc.n; ++i) out.y[i] = fam.sample(theta.at(i), rng);
  out.data.add_real("response", out.y.matrix());

  std::vector<Index> idx(static_cast<size_t>(sc.n));
  std::iota(idx.begin(), idx.end(), 0);
  if (sc.holdout > 0.0) {
    std::shuffle(idx.begin(), idx.end(), rng);
    const Index cut = static_cast<Index>(std::llround((1.0 - sc.holdout) * sc.n));
    out.train_rows.assign(idx.begin(), idx.begin() + cut);
    out.holdout_rows.assign(idx.begin() + cut, idx.end());
    std::sort(out.train_rows.begin(), out.train_rows.end());
    std::sort(out.holdout_rows.begin(), out.holdout_rows.end());
  } else {
    out.train_rows = idx;
  }
  return out;
}

inline ModelSpec candidate_spec(const ScenarioConfig& sc, FamilyId candidate) {
  ModelSpec spec;
  spec.family = candidate;
  const Family& fam = family(candidate);
  spec.predictors.resize(static_cast<size_t>(fam.param_count()));
  const int primary = primary_param(candidate);
  spec.predictors[static_cast<size_t>(primary)].terms = sc.terms;
  return spec;
}

/// The sine truth component on the primary parameter, if any.
inline const TrueFun* smooth_truth(const ScenarioConfig& sc) {
  const int primary = primary_param(sc.family);
  for (const auto& f : sc.truth[static_cast<size_t>(primary)]) {
    if (f.kind == TrueFun::Kind::sine) return &f;
  }
  return nullptr;
}

}  // namespace simdetail

/// Per replicate: generate data from the scenario's truth, fit every
/// candidate family with the shared predictor structure, and tabulate
/// DIC, hold-out log scores and (for the true family) smooth-effect
/// recovery. Failed fits are recorded and the run continues.
inline SimulationReport run_simulation(const ScenarioConfig& sc, const SamplerConfig& sampler_cfg,
                                       std::uint64_t seed, int workers = 1) {
  SimulationReport report;
  report.replicates.resize(static_cast<size_t>(sc.replicates));

  parallel_for(sc.replicates, workers, [&](int r) {
    ReplicateResult& rep = report.replicates[static_cast<size_t>(r)];
    rep.replicate = r;
    const std::uint64_t rep_seed = mix_seed(seed, static_cast<std::uint64_t>(r));
    const simdetail::GeneratedData gen = simdetail::generate(sc, rep_seed);
    const Dataset train = gen.data.subset(gen.train_rows);
    const Dataset holdout =
        gen.holdout_rows.empty() ? Dataset{} : gen.data.subset(gen.holdout_rows);

    for (size_t c = 0; c < sc.candidates.size(); ++c) {
      CandidateResult cand;
      cand.candidate = sc.candidates[c];
      try {
        const ModelSpec spec = simdetail::candidate_spec(sc, cand.candidate);
        const AssembledModel model = assemble_predictors(spec, train);
        SamplerConfig cfg = sampler_cfg;
        cfg.seed = mix_seed(rep_seed, c + 1);
        const Obs obs{train.real("response").array()};
        const ChainResult fit = run_chain(model, obs, cfg);
        const DicResult d = dic(fit.store, model, obs);
        cand.dic = d.dic;
        cand.pd = d.pd;

        if (!gen.holdout_rows.empty()) {
          std::vector<std::vector<Vector>> coefs;
          for (int k = 0; k < model.fam().param_count(); ++k) {
            coefs.push_back(fit.store.mean_coefs(k));
          }
          double ls = 0.0;
          Index kept = 0;
          for (Index i = 0; i < holdout.n(); ++i) {
            try {
              const ParamVector t = predict_theta(model, coefs, holdout, i, false);
              ls += family(cand.candidate).log_density(holdout.real("response")[i], t);
              ++kept;
            } catch (const ExtrapolationError&) {
              ++cand.holdout_excluded;
            }
          }
          cand.holdout_n = kept;
          if (kept > 0) cand.holdout_ls = ls / static_cast<double>(kept);
        }

        // smooth recovery for the correctly specified candidate
        if (cand.candidate == sc.family) {
          const TrueFun* f = simdetail::smooth_truth(sc);
          if (f != nullptr) {
            const int primary = primary_param(sc.family);
            int block_index = -1;
            const auto& blocks = model.params[static_cast<size_t>(primary)];
            for (size_t j = 0; j < blocks.size(); ++j) {
              if (blocks[j].kind == TermKind::pspline && blocks[j].col == f->col) {
                block_index = static_cast<int>(j);
              }
            }
            if (block_index >= 0) {
              const auto& block = blocks[static_cast<size_t>(block_index)];
              const Vector& x_train = train.real(f->col);
              // constrained fits satisfy sum_i fhat(x_i) = 0 over the
              // training points, so centre the truth the same way
              double truth_mean = 0.0;
              for (Index i = 0; i < x_train.size(); ++i) truth_mean += f->eval(x_train[i]);
              truth_mean /= static_cast<double>(x_train.size());

              const int g = 100;
              Vector grid(g);
              const double lo = block.basis->xmin(), hi = block.basis->xmax();
              for (int i = 0; i < g; ++i) grid[i] = lo + (hi - lo) * i / (g - 1.0);
              Dataset grid_data;
              grid_data.add_real(f->col, grid);
              const CurveSamples curves =
                  effect_curve(fit.store, model, primary, block_index, grid_data, grid);
              const Band band = pointwise_band(curves, 0.95);
              double se = 0.0;
              Index covered = 0;
              for (int i = 0; i < g; ++i) {
                const double target = f->eval(grid[i]) - truth_mean;
                se += (band.center[i] - target) * (band.center[i] - target);
                if (target >= band.lower[i] && target <= band.upper[i]) ++covered;
              }
              rep.smooth_rmse = std::sqrt(se / g);
              rep.smooth_coverage = static_cast<double>(covered) / g;
            }
          }
        }
        cand.ok = true;
      } catch (const Error& err) {
        cand.error = err.what();
      }
      rep.candidates.push_back(std::move(cand));
    }

    // winners
    double best_dic = std::numeric_limits<double>::infinity();
    double best_ls = -std::numeric_limits<double>::infinity();
    for (size_t c = 0; c < rep.candidates.size(); ++c) {
      const auto& cand = rep.candidates[c];
      if (!cand.ok) continue;
      if (cand.dic < best_dic) {
        best_dic = cand.dic;
        rep.dic_winner = static_cast<int>(c);
      }
      if (std::isfinite(cand.holdout_ls) && cand.holdout_ls > best_ls) {
        best_ls = cand.holdout_ls;
        rep.ls_winner = static_cast<int>(c);
      }
    }
  });

  double rmse_sum = 0.0, cov_sum = 0.0;
  int rmse_n = 0;
  for (const auto& rep : report.replicates) {
    bool all_ok = !rep.candidates.empty();
    for (const auto& c : rep.candidates) all_ok = all_ok && c.ok;
    if (all_ok) ++report.completed;
    if (rep.dic_winner >= 0 &&
        rep.candidates[static_cast<size_t>(rep.dic_winner)].candidate == sc.family) {
      ++report.dic_correct;
    }
    if (rep.ls_winner >= 0 &&
        rep.candidates[static_cast<size_t>(rep.ls_winner)].candidate == sc.family) {
      ++report.ls_correct;
    }
    if (std::isfinite(rep.smooth_rmse)) {
      rmse_sum += rep.smooth_rmse;
      cov_sum += rep.smooth_coverage;
      ++rmse_n;
    }
  }
  if (rmse_n > 0) {
    report.mean_rmse = rmse_sum / rmse_n;
    report.mean_coverage = cov_sum / rmse_n;
  }
  return report;
}

}  // namespace distreg
