#include <catch2/catch_amalgamated.hpp>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "distreg/derived.hpp"
#include "support/oracles.hpp"

using namespace distreg;
using Catch::Approx;

TEST_CASE("dagum moments") {
  SECTION("log-logistic special case") {
    const Moments m = dagum_moments({2.0, 1.0, 1.0});
    REQUIRE(m.mean.has_value());
    CHECK(*m.mean == Approx(M_PI / 2.0).epsilon(1e-10));
    CHECK_FALSE(m.sd.has_value());  // needs a > 2
  }
  SECTION("boundary rule") {
    const Moments m = dagum_moments({1.0, 2.0, 1.5});
    CHECK_FALSE(m.mean.has_value());
    CHECK_FALSE(m.sd.has_value());
  }
  SECTION("closed form vs quadrature of y p(y)") {
    // moments via the quantile substitution int_0^1 q(1-eps)^k d(eps);
    // tanh-sinh absorbs the algebraic singularity of the heavy upper
    // tail, and expm1/log1p keep the quantile accurate near eps = 0
    boost::math::quadrature::tanh_sinh<double> ts;
    Rng rng = make_rng(71);
    for (int rep = 0; rep < 8; ++rep) {
      const ParamVector t{2.5 + 3.0 * draw_uniform(rng), 0.5 + 2.0 * draw_uniform(rng),
                          0.5 + 2.0 * draw_uniform(rng)};
      const Moments m = dagum_moments(t);
      REQUIRE(m.mean.has_value());
      REQUIRE(m.sd.has_value());
      auto moment_k = [&](double k) {
        return ts.integrate(
            [&](double eps) {
              const double base = std::expm1(-std::log1p(-eps) / t[2]);  // u^{-1/c} - 1
              return std::pow(t[1], k) * std::pow(base, -k / t[0]);
            },
            0.0, 1.0);
      };
      const double m1 = moment_k(1.0);
      const double m2 = moment_k(2.0);
      CHECK(*m.mean == Approx(m1).epsilon(1e-6));
      CHECK(*m.sd == Approx(std::sqrt(m2 - m1 * m1)).epsilon(1e-6));
    }
  }
}

TEST_CASE("dagum gini") {
  SECTION("log-logistic value 1/a") {
    const auto g = dagum_gini({2.0, 1.0, 1.0});
    REQUIRE(g.has_value());
    CHECK(*g == Approx(0.5).epsilon(1e-12));
  }
  SECTION("scale invariance is exact") {
    const auto g1 = dagum_gini({3.0, 1.0, 2.0});
    const auto g2 = dagum_gini({3.0, 2.0, 2.0});
    REQUIRE(g1.has_value());
    CHECK(*g1 == *g2);
  }
  SECTION("undefined below the mean-existence boundary") {
    CHECK_FALSE(dagum_gini({1.0, 1.0, 1.0}).has_value());
    CHECK_FALSE(dagum_gini({0.7, 1.0, 1.0}).has_value());
  }
  SECTION("Monte Carlo Lorenz oracle") {
    Rng rng = make_rng(72);
    const Family& da = family(FamilyId::dagum);
    for (int rep = 0; rep < 3; ++rep) {
      const ParamVector t{3.0 + 2.0 * draw_uniform(rng), 0.5 + draw_uniform(rng),
                          0.6 + 1.5 * draw_uniform(rng)};
      std::vector<double> y(300000);
      for (auto& v : y) v = da.sample(t, rng);
      CHECK(*dagum_gini(t) == Approx(oracles::gini_from_samples(std::move(y))).margin(2e-3));
    }
  }
}

TEST_CASE("family moments and gini") {
  SECTION("log-normal gini collapses as the variance vanishes") {
    const auto d = family_moments_gini(FamilyId::lognormal, {0.4, 1e-12});
    REQUIRE(d.gini.has_value());
    CHECK(*d.gini == Approx(0.0).margin(1e-6));
  }
  SECTION("gamma mean is exactly mu") {
    const auto d = family_moments_gini(FamilyId::gamma, {2.7, 1.9});
    CHECK(*d.mean == 2.7);
    CHECK(*d.sd == Approx(2.7 / std::sqrt(1.9)).epsilon(1e-12));
  }
  SECTION("inverse gaussian mean validated by quadrature") {
    const ParamVector t{1.6, 0.5};
    const Family& ig = family(FamilyId::inverse_gaussian);
    const double med = ig.quantile(0.5, t);
    auto integrand = [&](double y) { return y * std::exp(ig.log_density(y, t)); };
    const double by_quad = integrate(integrand, 0.0, med, 1e-10) +
                           integrate(integrand, med, std::numeric_limits<double>::infinity(),
                                     1e-10);
    const auto d = family_moments_gini(FamilyId::inverse_gaussian, t);
    CHECK(*d.mean == Approx(by_quad).epsilon(1e-8));
  }
  SECTION("closed-form ginis pass the Monte Carlo Lorenz oracle") {
    Rng rng = make_rng(73);
    const ParamVector ln_t{0.3, 0.8};
    std::vector<double> y(300000);
    for (auto& v : y) v = family(FamilyId::lognormal).sample(ln_t, rng);
    const auto ln_d = family_moments_gini(FamilyId::lognormal, ln_t);
    CHECK(*ln_d.gini == Approx(oracles::gini_from_samples(std::move(y))).margin(3e-3));

    const ParamVector ga_t{2.0, 1.7};
    std::vector<double> yg(300000);
    for (auto& v : yg) v = family(FamilyId::gamma).sample(ga_t, rng);
    const auto ga_d = family_moments_gini(FamilyId::gamma, ga_t);
    CHECK(*ga_d.gini == Approx(oracles::gini_from_samples(std::move(yg))).margin(3e-3));
  }
  SECTION("inverse gaussian gini comes from Monte Carlo with a standard error") {
    Rng rng = make_rng(74);
    const auto d = family_moments_gini(FamilyId::inverse_gaussian, {1.0, 0.4}, &rng, 200000);
    REQUIRE(d.gini.has_value());
    CHECK(d.gini_mc_se > 0.0);
    CHECK(*d.gini > 0.0);
    CHECK(*d.gini < 1.0);
  }
  SECTION("gamma gini is invariant to mu rescaling, exactly") {
    const auto a = family_moments_gini(FamilyId::gamma, {1.0, 2.2});
    const auto b = family_moments_gini(FamilyId::gamma, {7.0, 2.2});
    CHECK(*a.gini == *b.gini);
  }
}

namespace {

struct FitFixture {
  Dataset data;
  Obs obs;
  AssembledModel model;
  ChainResult fit;

  explicit FitFixture(std::uint64_t seed, Index n = 200) : obs(make_y(seed, n)) {
    Vector x(n), east(n);
    Rng rng = make_rng(seed + 1);
    for (Index i = 0; i < n; ++i) {
      x[i] = draw_uniform(rng);
      east[i] = (i % 2 == 0) ? 1.0 : -1.0;
    }
    data.add_real("x", x);
    data.add_real("east", east);
    data.add_real("income", obs.y.matrix());
    ModelSpec spec;
    spec.family = FamilyId::lognormal;
    spec.predictors.resize(2);
    TermDef ps{TermType::pspline, "x"};
    ps.knots = 8;
    spec.predictors[0].terms = {ps, TermDef{TermType::linear, "east"}};
    model = assemble_predictors(spec, data);
    SamplerConfig cfg;
    cfg.iterations = 2600;
    cfg.burnin = 600;
    cfg.thin = 4;
    cfg.seed = seed;
    fit = run_chain(model, obs, cfg);
  }

  static Array make_y(std::uint64_t seed, Index n) {
    Rng rng = make_rng(seed);
    Array y(n);
    for (Index i = 0; i < n; ++i) {
      const double east = (i % 2 == 0) ? 1.0 : -1.0;
      y[i] = std::exp(1.2 + 0.4 * east + 0.35 * draw_normal(rng));
    }
    return y;
  }
};

}  // namespace

TEST_CASE("posterior mean density") {
  FitFixture fx(81);
  Dataset profile;
  profile.add_real("x", Vector::Constant(1, 0.5));
  profile.add_real("east", Vector::Constant(1, 1.0));

  std::vector<std::vector<Vector>> mean_coefs;
  for (int k = 0; k < 2; ++k) mean_coefs.push_back(fx.fit.store.mean_coefs(k));
  const ParamVector plugin = predict_theta(fx.model, mean_coefs, profile, 0);
  // a grid wide enough that the mass outside is negligible for every draw
  const Family& ln = family(FamilyId::lognormal);
  Vector grid(1024);
  const double lo = ln.quantile(1e-7, plugin), hi = ln.quantile(1.0 - 1e-7, plugin) * 1.5;
  for (Index i = 0; i < grid.size(); ++i) {
    grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid.size() - 1);
  }
  const DensityCurve curve = posterior_mean_density(fx.fit.store, fx.model, profile, grid);

  SECTION("posterior-mean and plug-in densities both integrate to one") {
    const double step = grid[1] - grid[0];
    CHECK(oracles::trapezoid(curve.posterior_mean.array(), step) == Approx(1.0).margin(2e-3));
    CHECK(oracles::trapezoid(curve.plugin.array(), step) == Approx(1.0).margin(2e-3));
  }

  SECTION("single retained draw collapses onto the plug-in density") {
    PosteriorStore single = PosteriorStore::with_layout(fx.model);
    single.reserve(1);
    single.mutable_draws() = fx.fit.store.draws().row(7);
    const DensityCurve c1 = posterior_mean_density(single, fx.model, profile, grid);
    CHECK((c1.posterior_mean - c1.plugin).lpNorm<Eigen::Infinity>() == Approx(0.0).margin(1e-14));
  }

  SECTION("east/west-style flips move the density") {
    Dataset flipped;
    flipped.add_real("x", Vector::Constant(1, 0.5));
    flipped.add_real("east", Vector::Constant(1, -1.0));
    const DensityCurve other = posterior_mean_density(fx.fit.store, fx.model, flipped, grid);
    CHECK((other.posterior_mean - curve.posterior_mean).lpNorm<Eigen::Infinity>() > 0.05);
  }
}

TEST_CASE("simultaneous bands") {
  SECTION("constant curves give a zero-width band") {
    CurveSamples c;
    c.grid = Vector::LinSpaced(5, 0.0, 1.0);
    c.values = Matrix::Constant(150, 5, 3.3);
    const Band band = simultaneous_band(c, 0.95);
    CHECK(band.excluded.size() == 5);
    CHECK((band.lower - band.center).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((band.upper - band.center).lpNorm<Eigen::Infinity>() == 0.0);
  }

  SECTION("contains the pointwise band and the right fraction of curves") {
    Rng rng = make_rng(82);
    CurveSamples c;
    const Index draws = 400, g = 30;
    c.grid = Vector::LinSpaced(g, 0.0, 1.0);
    c.values.resize(draws, g);
    for (Index t = 0; t < draws; ++t) {
      const double a = draw_normal(rng), b = draw_normal(rng);
      for (Index i = 0; i < g; ++i) {
        c.values(t, i) = a + b * c.grid[i] + 0.1 * draw_normal(rng);
      }
    }
    const Band sim = simultaneous_band(c, 0.95);
    const Band pw = pointwise_band(c, 0.95);
    for (Index i = 0; i < g; ++i) {
      CHECK(sim.lower[i] <= pw.lower[i] + 1e-12);
      CHECK(sim.upper[i] >= pw.upper[i] - 1e-12);
    }
    Index inside = 0;
    for (Index t = 0; t < draws; ++t) {
      bool all = true;
      for (Index i = 0; i < g; ++i) {
        all = all && c.values(t, i) >= sim.lower[i] - 1e-12 &&
              c.values(t, i) <= sim.upper[i] + 1e-12;
      }
      inside += all ? 1 : 0;
    }
    CHECK(static_cast<double>(inside) >= 0.95 * draws);
  }

  SECTION("needs enough draws") {
    CurveSamples c;
    c.grid = Vector::LinSpaced(3, 0.0, 1.0);
    c.values = Matrix::Zero(50, 3);
    CHECK_THROWS_AS(simultaneous_band(c), NumericError);
  }
}

TEST_CASE("effect curves from the posterior store") {
  FitFixture fx(83);
  const auto& block = fx.model.params[0][1];
  const Vector grid = Vector::LinSpaced(40, 0.05, 0.95);
  Dataset grid_data;
  grid_data.add_real("x", grid);
  const CurveSamples curves = effect_curve(fx.fit.store, fx.model, 0, 1, grid_data, grid);
  CHECK(curves.draws() == fx.fit.store.draw_count());
  CHECK(curves.points() == 40);
  // spot check one entry against the direct computation
  const Vector row = block.effective_row(grid_data, 3, false);
  CHECK(curves.values(5, 3) == Approx(row.dot(fx.fit.store.block_coef(5, 0, 1))).epsilon(1e-12));
}

TEST_CASE("monotone transformations map interval endpoints consistently") {
  // 201 draws so the empirical quantile positions are exact order stats
  std::vector<double> mu(201);
  Rng rng = make_rng(84);
  for (auto& m : mu) m = 0.3 * draw_normal(rng);
  const double s2 = 0.49;
  std::vector<double> mean_draws(mu.size());
  for (size_t i = 0; i < mu.size(); ++i) mean_draws[i] = std::exp(mu[i] + 0.5 * s2);
  const ScalarSummary raw = summarize_scalar(std::vector<double>(mu), 0.9);
  const ScalarSummary transformed = summarize_scalar(mean_draws, 0.9);
  CHECK(transformed.median == Approx(std::exp(raw.median + 0.5 * s2)).epsilon(1e-12));
  CHECK(transformed.lower == Approx(std::exp(raw.lower + 0.5 * s2)).epsilon(1e-12));
  CHECK(transformed.upper == Approx(std::exp(raw.upper + 0.5 * s2)).epsilon(1e-12));
}
