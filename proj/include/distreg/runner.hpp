#pragma once

#include <filesystem>

#include "distreg/config.hpp"
#include "distreg/derived.hpp"
#include "distreg/io.hpp"
#include "distreg/modelsel.hpp"
#include "distreg/simulate.hpp"

namespace distreg {

namespace rundetail {

inline std::string sanitize(const std::string& label) {
  std::string out;
  bool last_sep = false;
  for (char c : label) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      last_sep = false;
    } else if (!last_sep && !out.empty()) {
      out += '_';
      last_sep = true;
    }
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

inline std::filesystem::path out_path(const RunConfig& cfg, const std::string& name) {
  return std::filesystem::path(cfg.out_dir) / name;
}

/// Columns a profile needs values for: every real covariate entering a
/// non-label-keyed term.
inline std::set<std::string> profile_columns(const AssembledModel& model) {
  std::set<std::string> cols;
  for (const auto& blocks : model.params) {
    for (const auto& b : blocks) {
      switch (b.kind) {
        case TermKind::linear:
        case TermKind::regional:
        case TermKind::pspline: cols.insert(b.col); break;
        case TermKind::varying:
          cols.insert(b.col);
          cols.insert(b.by_col);
          break;
        default: break;
      }
    }
  }
  return cols;
}

/// Profile dataset: config-specified values, column means elsewhere.
/// Label-keyed terms (random effects, spatial effects) evaluate at their
/// prior mean of zero.
inline Dataset build_profile(const RunConfig& cfg, const AssembledModel& model,
                             const Dataset& data) {
  Dataset profile;
  std::map<std::string, double> values;
  for (const auto& col : profile_columns(model)) values[col] = data.real(col).mean();
  for (const auto& [col, value] : cfg.derived.profile) values[col] = value;
  for (const auto& [col, value] : values) profile.add_real(col, Vector::Constant(1, value));
  if (profile.n() < 0) profile.add_real("__const", Vector::Zero(1));
  return profile;
}

/// Simultaneous bands need >= 100 draws; short runs fall back to NaN
/// columns rather than failing the whole fit.
inline Band simultaneous_or_nan(const CurveSamples& curves, double level) {
  if (curves.draws() >= 100) return simultaneous_band(curves, level);
  Band band;
  band.center = curves.values.colwise().mean().transpose();
  band.lower = Vector::Constant(curves.points(), std::numeric_limits<double>::quiet_NaN());
  band.upper = band.lower;
  return band;
}

inline void write_effect_curves(const RunConfig& cfg, const AssembledModel& model,
                                const PosteriorStore& store) {
  const Family& fam = model.fam();
  for (size_t k = 0; k < model.params.size(); ++k) {
    for (size_t j = 0; j < model.params[k].size(); ++j) {
      const DesignBlock& block = model.params[k][j];
      const std::string stem = std::string(fam.param_name(static_cast<int>(k))) + "_" +
                               sanitize(block.label);
      if (block.kind == TermKind::pspline || block.kind == TermKind::varying) {
        const int g = 200;
        Vector grid(g);
        for (int i = 0; i < g; ++i) {
          grid[i] = block.basis->xmin() +
                    (block.basis->xmax() - block.basis->xmin()) * i / (g - 1.0);
        }
        Dataset grid_data;
        grid_data.add_real(block.col, grid);
        if (block.kind == TermKind::varying) {
          grid_data.add_real(block.by_col, Vector::Ones(g));  // the interaction curve itself
        }
        const CurveSamples curves =
            effect_curve(store, model, static_cast<int>(k), static_cast<int>(j), grid_data, grid);
        const Band pw = pointwise_band(curves, cfg.derived.level);
        const Band sim = simultaneous_or_nan(curves, cfg.derived.level);
        Vector plugin = Vector::Zero(g);
        const Vector mean_coef = store.mean_block_coef(static_cast<int>(k), static_cast<int>(j));
        for (int i = 0; i < g; ++i) {
          plugin[i] = block.effective_row(grid_data, i, false).dot(mean_coef);
        }
        Matrix rows(g, 7);
        rows.col(0) = grid;
        rows.col(1) = pw.center;
        rows.col(2) = pw.lower;
        rows.col(3) = pw.upper;
        rows.col(4) = sim.lower;
        rows.col(5) = sim.upper;
        rows.col(6) = plugin;
        write_csv(out_path(cfg, "effect_" + stem + ".csv").string(),
                  {"grid", "mean", "lower", "upper", "sim_lower", "sim_upper", "plugin"}, rows);
      } else if (block.kind == TermKind::random_effect || block.kind == TermKind::mrf) {
        // per-level effects, labels included
        const Index levels = static_cast<Index>(block.levels.size());
        Dataset level_data;
        level_data.add_labels(block.col, block.levels);
        Matrix rows_mat(store.draw_count(), levels);
        for (Index l = 0; l < levels; ++l) {
          const Vector row = block.effective_row(level_data, l, false);
          rows_mat.col(l) = store.block_draws(static_cast<int>(k), static_cast<int>(j)) * row;
        }
        CurveSamples curves;
        curves.grid = Vector::LinSpaced(levels, 0, static_cast<double>(levels - 1));
        curves.values = rows_mat;
        const Band pw = pointwise_band(curves, cfg.derived.level);
        const Band sim = simultaneous_or_nan(curves, cfg.derived.level);
        std::ofstream out(out_path(cfg, "effect_" + stem + ".csv"));
        if (!out) throw IoError("cannot write effect file for " + block.label);
        out << "level,mean,lower,upper,sim_lower,sim_upper\n";
        for (Index l = 0; l < levels; ++l) {
          out << block.levels[static_cast<size_t>(l)] << "," << detail::format_full(pw.center[l])
              << "," << detail::format_full(pw.lower[l]) << ","
              << detail::format_full(pw.upper[l]) << "," << detail::format_full(sim.lower[l])
              << "," << detail::format_full(sim.upper[l]) << "\n";
        }
      }
    }
  }
}

inline bool wants(const RunConfig& cfg, const std::string& quantity) {
  const auto& q = cfg.derived.quantities;
  return std::find(q.begin(), q.end(), quantity) != q.end();
}


/// Per-draw derived quantity at a single-row profile dataset.
inline std::vector<double> derived_draws(const RunConfig& cfg, const AssembledModel& model,
                                         const PosteriorStore& store, const Dataset& profile,
                                         const std::string& quantity, Index& undefined) {
  std::vector<double> out;
  undefined = 0;
  std::vector<std::vector<Vector>> coefs(model.params.size());
  for (Index t = 0; t < store.draw_count(); ++t) {
    for (size_t k = 0; k < model.params.size(); ++k) {
      coefs[k] = store.coefs_at(t, static_cast<int>(k));
    }
    const ParamVector theta = predict_theta(model, coefs, profile, 0, false);
    const DerivedQuantities d = family_moments_gini(cfg.family, theta);
    std::optional<double> v;
    if (quantity == "mean") v = d.mean;
    if (quantity == "sd") v = d.sd;
    if (quantity == "gini") v = d.gini;
    if (v.has_value()) {
      out.push_back(*v);
    } else {
      ++undefined;
    }
  }
  return out;
}

inline void write_derived(const RunConfig& cfg, const AssembledModel& model,
                          const PosteriorStore& store, const Dataset& data) {
  if (cfg.derived.quantities.empty()) return;
  const Dataset profile = build_profile(cfg, model, data);

  std::vector<std::vector<Vector>> mean_coefs(model.params.size());
  for (size_t k = 0; k < model.params.size(); ++k) {
    mean_coefs[k] = store.mean_coefs(static_cast<int>(k));
  }
  const ParamVector plugin = predict_theta(model, mean_coefs, profile, 0, false);

  // scalar summaries at the profile
  std::ofstream sum(out_path(cfg, "derived_summary.csv"));
  if (!sum) throw IoError("cannot write derived_summary.csv");
  sum << "quantity,mean,median,lower,upper,n_draws,n_undefined,mc_se\n";
  for (const std::string quantity : {"mean", "sd", "gini"}) {
    if (!wants(cfg, quantity)) continue;
    if (quantity == "gini" && !gini_closed_form(cfg.family)) {
      // Monte Carlo at the plug-in parameters; per-draw propagation is
      // not affordable without a closed form
      Rng rng = make_rng(cfg.seed, 0x6161);
      const McGini g = monte_carlo_gini(model.fam(), plugin, 1000000, rng);
      sum << quantity << "," << detail::format_full(g.value) << ",nan,nan,nan,0,0,"
          << detail::format_full(g.se) << "\n";
      continue;
    }
    Index undefined = 0;
    const std::vector<double> draws =
        derived_draws(cfg, model, store, profile, quantity, undefined);
    if (draws.empty()) {
      sum << quantity << ",nan,nan,nan,nan,0," << undefined << ",0\n";
      continue;
    }
    const ScalarSummary s = summarize_scalar(draws, cfg.derived.level);
    sum << quantity << "," << detail::format_full(s.mean) << "," << detail::format_full(s.median)
        << "," << detail::format_full(s.lower) << "," << detail::format_full(s.upper) << ","
        << draws.size() << "," << undefined << ",0\n";
  }
  sum.close();

  if (wants(cfg, "density")) {
    const Vector grid = default_density_grid(cfg.family, plugin);
    const DensityCurve curve = posterior_mean_density(store, model, profile, grid);
    const Band pw = pointwise_band(curve.draws, cfg.derived.level);
    Matrix rows(grid.size(), 5);
    rows.col(0) = grid;
    rows.col(1) = curve.posterior_mean;
    rows.col(2) = curve.plugin;
    rows.col(3) = pw.lower;
    rows.col(4) = pw.upper;
    write_csv(out_path(cfg, "derived_density.csv").string(),
              {"y", "posterior_mean", "plugin", "lower", "upper"}, rows);
  }

  if (!cfg.derived.curve.empty()) {
    const std::string& col = cfg.derived.curve;
    const Vector& x = data.real(col);
    const int g = 100;
    Vector grid(g);
    for (int i = 0; i < g; ++i) {
      grid[i] = x.minCoeff() + (x.maxCoeff() - x.minCoeff()) * i / (g - 1.0);
    }
    for (const std::string quantity : {"mean", "sd", "gini"}) {
      if (!wants(cfg, quantity)) continue;
      if (quantity == "gini" && !gini_closed_form(cfg.family)) continue;
      CurveSamples curves;
      curves.grid = grid;
      curves.values.resize(store.draw_count(), g);
      std::vector<std::vector<Vector>> coefs(model.params.size());
      bool all_defined = true;
      for (Index t = 0; t < store.draw_count() && all_defined; ++t) {
        for (size_t k = 0; k < model.params.size(); ++k) {
          coefs[k] = store.coefs_at(t, static_cast<int>(k));
        }
        for (int i = 0; i < g && all_defined; ++i) {
          Dataset point;
          for (const auto& name : profile_columns(model)) {
            point.add_real(name, Vector::Constant(
                                      1, name == col ? grid[i] : profile.real(name)[0]));
          }
          const ParamVector theta = predict_theta(model, coefs, point, 0, false);
          const DerivedQuantities d = family_moments_gini(cfg.family, theta);
          std::optional<double> v;
          if (quantity == "mean") v = d.mean;
          if (quantity == "sd") v = d.sd;
          if (quantity == "gini") v = d.gini;
          if (!v.has_value()) {
            all_defined = false;
            break;
          }
          curves.values(t, i) = *v;
        }
      }
      if (!all_defined) continue;  // undefined moments along the curve
      const Band pw = pointwise_band(curves, cfg.derived.level);
      const Band sim = simultaneous_or_nan(curves, cfg.derived.level);
      Matrix rows(g, 6);
      rows.col(0) = grid;
      rows.col(1) = pw.center;
      rows.col(2) = pw.lower;
      rows.col(3) = pw.upper;
      rows.col(4) = sim.lower;
      rows.col(5) = sim.upper;
      write_csv(out_path(cfg, "derived_" + quantity + "_curve.csv").string(),
                {"grid", "mean", "lower", "upper", "sim_lower", "sim_upper"}, rows);
    }
  }
}

inline void write_scores(const RunConfig& cfg, const ScoreReport& report) {
  std::ofstream out(out_path(cfg, "scores.csv"));
  if (!out) throw IoError("cannot write scores.csv");
  out << "label,ls,qs,sps,crps,n_ls,n_density,n_crps,excluded_extrapolation,excluded_divergent\n";
  auto row = [&](const ScoreRow& r) {
    out << r.label << "," << detail::format_full(r.ls) << "," << detail::format_full(r.qs) << ","
        << detail::format_full(r.sps) << "," << detail::format_full(r.crps) << "," << r.n_ls
        << "," << r.n_density << "," << r.n_crps << "," << r.excluded_extrapolation << ","
        << r.excluded_divergent << "\n";
  };
  for (const auto& f : report.folds) row(f);
  row(report.fold_mean);
  row(report.pooled);
  out.close();

  if (report.crps_curve.count > 0) {
    Matrix rows(report.crps_curve.alpha.size(), 2);
    rows.col(0) = report.crps_curve.alpha;
    rows.col(1) = report.crps_curve.mean_contribution;
    write_csv(out_path(cfg, "crps_alpha.csv").string(), {"alpha", "mean_score"}, rows);
  }
}

struct LoadedData {
  Dataset data;
  std::optional<AdjacencyMap> adjacency;

  const AdjacencyMap* adj() const { return adjacency ? &*adjacency : nullptr; }
};

inline LoadedData load(const RunConfig& cfg) {
  LoadedData out;
  out.data = read_csv(cfg.dataset_path, cfg.categorical);
  if (!cfg.adjacency_path.empty()) out.adjacency = read_adjacency(cfg.adjacency_path);
  return out;
}

}  // namespace rundetail

/// Fit the configured model and write every artifact: posterior draws,
/// run report, DIC, residual diagnostics, effect curves with bands and
/// the requested derived-quantity tables.
inline void run_fit(const RunConfig& cfg) {
  std::filesystem::create_directories(cfg.out_dir);
  const rundetail::LoadedData loaded = rundetail::load(cfg);
  const AssembledModel model = assemble_predictors(cfg.model_spec(), loaded.data, loaded.adj());
  const Obs obs{loaded.data.real(cfg.response).array()};
  SamplerConfig sampler_cfg = cfg.sampler;
  sampler_cfg.seed = cfg.seed;
  const ChainResult fit = run_chain(model, obs, sampler_cfg);

  write_draws(rundetail::out_path(cfg, "draws.csv").string(), fit.store);

  const DicResult d = dic(fit.store, model, obs);
  Matrix dic_row(1, 3);
  dic_row << d.dic, d.pd, d.mean_deviance;
  write_csv(rundetail::out_path(cfg, "dic.csv").string(), {"dic", "pd", "mean_deviance"}, dic_row);

  const PredictiveSet fitted = fitted_set(model, fit.store, obs);
  const PitResult pit = pit_values(fitted);
  Matrix pit_rows(pit.values.size(), 2);
  for (Index i = 0; i < pit.values.size(); ++i) {
    pit_rows(i, 0) = static_cast<double>(i);
    pit_rows(i, 1) = pit.values[i];
  }
  write_csv(rundetail::out_path(cfg, "pit.csv").string(), {"index", "pit"}, pit_rows);

  const ResidualResult res = quantile_residuals(fitted);
  write_csv(rundetail::out_path(cfg, "qq.csv").string(), {"theoretical", "observed"},
            qq_pairs(res));

  rundetail::write_effect_curves(cfg, model, fit.store);
  rundetail::write_derived(cfg, model, fit.store, loaded.data);

  write_report(rundetail::out_path(cfg, "report.txt").string(), fit.report,
               {{"dic", detail::format_full(d.dic)},
                {"pit_clamp_count", std::to_string(pit.clamp_count)}});
}

/// k-fold cross-validation with the four proper scores and the CRPS
/// quantile decomposition.
inline void run_cv(const RunConfig& cfg) {
  std::filesystem::create_directories(cfg.out_dir);
  const rundetail::LoadedData loaded = rundetail::load(cfg);
  SamplerConfig sampler_cfg = cfg.sampler;
  sampler_cfg.seed = cfg.seed;
  const ScoreReport report = cross_validate(cfg.model_spec(), loaded.data, cfg.response,
                                            cfg.cv_folds, sampler_cfg, loaded.adj(), cfg.workers);
  rundetail::write_scores(cfg, report);
}

/// Fit once and score the training sample at the plug-in parameters
/// (in-sample scores; use `cv` for honest out-of-sample numbers).
inline void run_score(const RunConfig& cfg) {
  std::filesystem::create_directories(cfg.out_dir);
  const rundetail::LoadedData loaded = rundetail::load(cfg);
  const AssembledModel model = assemble_predictors(cfg.model_spec(), loaded.data, loaded.adj());
  const Obs obs{loaded.data.real(cfg.response).array()};
  SamplerConfig sampler_cfg = cfg.sampler;
  sampler_cfg.seed = cfg.seed;
  const ChainResult fit = run_chain(model, obs, sampler_cfg);
  write_draws(rundetail::out_path(cfg, "draws.csv").string(), fit.store);
  write_report(rundetail::out_path(cfg, "report.txt").string(), fit.report);

  ScoreReport report;
  CrpsCurve curve;
  ScoreRow row = score_set(fitted_set(model, fit.store, obs), &curve);
  row.label = "insample";
  report.folds.push_back(row);
  report.fold_mean = row;
  report.fold_mean.label = "overall";
  report.pooled = row;
  report.pooled.label = "pooled";
  report.crps_curve = curve;
  rundetail::write_scores(cfg, report);
}

/// Simulation study: per replicate and candidate family, DIC and
/// hold-out scores plus smooth-recovery statistics, with aggregates.
inline void run_simulate(const RunConfig& cfg) {
  std::filesystem::create_directories(cfg.out_dir);
  if (!cfg.scenario) throw ConfigError("simulate task needs a [scenario] section");
  SamplerConfig sampler_cfg = cfg.sampler;
  sampler_cfg.seed = cfg.seed;
  const SimulationReport report = run_simulation(*cfg.scenario, sampler_cfg, cfg.seed,
                                                 cfg.workers);

  std::ofstream out(rundetail::out_path(cfg, "simulation.csv"));
  if (!out) throw IoError("cannot write simulation.csv");
  out << "replicate,candidate,ok,dic,pd,holdout_ls,holdout_n,holdout_excluded,"
         "smooth_rmse,smooth_coverage,error\n";
  for (const auto& rep : report.replicates) {
    for (const auto& c : rep.candidates) {
      const bool truth = c.candidate == cfg.scenario->family;
      out << rep.replicate << "," << to_string(c.candidate) << "," << (c.ok ? 1 : 0) << ","
          << detail::format_full(c.dic) << "," << detail::format_full(c.pd) << ","
          << detail::format_full(c.holdout_ls) << "," << c.holdout_n << ","
          << c.holdout_excluded << ","
          << detail::format_full(truth ? rep.smooth_rmse
                                       : std::numeric_limits<double>::quiet_NaN())
          << ","
          << detail::format_full(truth ? rep.smooth_coverage
                                       : std::numeric_limits<double>::quiet_NaN())
          << "," << c.error << "\n";
    }
  }
  out.close();

  Matrix summary(1, 6);
  summary << static_cast<double>(cfg.scenario->replicates), static_cast<double>(report.completed),
      static_cast<double>(report.dic_correct), static_cast<double>(report.ls_correct),
      report.mean_rmse, report.mean_coverage;
  write_csv(rundetail::out_path(cfg, "simulation_summary.csv").string(),
            {"replicates", "completed", "dic_correct", "ls_correct", "mean_rmse",
             "mean_coverage"},
            summary);
}

/// Dispatch on the configured task; returns a process exit code.
inline int run_task(const RunConfig& cfg) {
  switch (cfg.task) {
    case Task::fit: run_fit(cfg); break;
    case Task::cv: run_cv(cfg); break;
    case Task::score: run_score(cfg); break;
    case Task::simulate: run_simulate(cfg); break;
  }
  return 0;
}

}  // namespace distreg
