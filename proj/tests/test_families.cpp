#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <vector>

#include "distreg/families.hpp"
#include "distreg/quadrature.hpp"
#include "support/oracles.hpp"

using namespace distreg;
using Catch::Approx;

namespace {

const FamilyId kAll[] = {FamilyId::lognormal, FamilyId::inverse_gaussian, FamilyId::gamma,
                         FamilyId::dagum};

ParamVector random_params(FamilyId id, Rng& rng) {
  auto unif = [&](double lo, double hi) { return lo + (hi - lo) * draw_uniform(rng); };
  switch (id) {
    case FamilyId::lognormal: return {unif(-1.0, 2.0), unif(0.2, 2.5)};
    case FamilyId::inverse_gaussian: return {unif(0.3, 4.0), unif(0.1, 2.0)};
    case FamilyId::gamma: return {unif(0.3, 4.0), unif(0.6, 6.0)};
    case FamilyId::dagum: return {unif(1.2, 6.0), unif(0.3, 4.0), unif(0.4, 4.0)};
  }
  return {1.0, 1.0};
}

}  // namespace

TEST_CASE("log density pinned values") {
  // log-normal at y=1 leaves only the normalising constant
  CHECK(family(FamilyId::lognormal).log_density(1.0, {0.0, 1.0}) ==
        Approx(-0.9189385332046727).epsilon(1e-12));
  // gamma with shape 1 is the exponential with mean mu
  CHECK(family(FamilyId::gamma).log_density(2.0, {2.0, 1.0}) ==
        Approx(std::log(0.5) - 1.0).epsilon(1e-12));
}

TEST_CASE("dagum density matches direct formula evaluation") {
  auto direct = [](double y, double a, double b, double c) {
    return a * c * std::pow(y, a * c - 1.0) /
           (std::pow(b, a * c) * std::pow(1.0 + std::pow(y / b, a), c + 1.0));
  };
  const Family& da = family(FamilyId::dagum);
  CHECK(da.log_density(1.0, {2.0, 1.0, 3.0}) == Approx(std::log(direct(1.0, 2.0, 1.0, 3.0))));
  Rng rng = make_rng(71);
  for (int i = 0; i < 25; ++i) {
    const ParamVector t = random_params(FamilyId::dagum, rng);
    const double y = da.sample(t, rng);
    CHECK(da.log_density(y, t) ==
          Approx(std::log(direct(y, t[0], t[1], t[2]))).epsilon(1e-9));
  }
}

TEST_CASE("boundary and domain errors") {
  const Family& ln = family(FamilyId::lognormal);
  CHECK_THROWS_AS(ln.log_density(-1.0, {0.0, 1.0}), NumericError);
  CHECK_THROWS_AS(ln.log_density(1.0, {0.0, 0.0}), NumericError);
  CHECK_THROWS_AS(ln.quantile(0.0, {0.0, 1.0}), NumericError);
  CHECK_THROWS_AS(ln.quantile(1.0, {0.0, 1.0}), NumericError);
  CHECK_THROWS_AS(family(FamilyId::dagum).log_density(1.0, {1.0, -2.0, 1.0}), NumericError);
}

TEST_CASE("cdf pinned values") {
  // Dagum at y = b gives (1+1)^{-c}
  CHECK(family(FamilyId::dagum).cdf(1.5, {2.0, 1.5, 1.0}) == Approx(0.5).epsilon(1e-12));
  CHECK(family(FamilyId::dagum).cdf(2.0, {3.0, 2.0, 4.0}) ==
        Approx(std::pow(2.0, -4.0)).epsilon(1e-12));
  // log-normal median
  CHECK(family(FamilyId::lognormal).quantile(0.5, {1.0, 4.0}) ==
        Approx(std::exp(1.0)).epsilon(1e-10));
}

TEST_CASE("inverse gaussian cdf matches quadrature of the density") {
  const Family& ig = family(FamilyId::inverse_gaussian);
  Rng rng = make_rng(123);
  for (int i = 0; i < 10; ++i) {
    const ParamVector t = random_params(FamilyId::inverse_gaussian, rng);
    const double y = ig.sample(t, rng);
    const double by_quad =
        integrate([&](double u) { return std::exp(ig.log_density(u, t)); }, 0.0, y, 1e-12);
    CHECK(ig.cdf(y, t) == Approx(by_quad).margin(1e-8));
  }
}

TEST_CASE("density normalisation for randomised interior parameters") {
  Rng rng = make_rng(5);
  for (FamilyId id : kAll) {
    const Family& fam = family(id);
    for (int rep = 0; rep < 3; ++rep) {
      const ParamVector t = random_params(id, rng);
      const double med = fam.quantile(0.5, t);
      auto p = [&](double y) { return std::exp(fam.log_density(y, t)); };
      const double mass = integrate(p, 0.0, med, 1e-9) +
                          integrate(p, med, std::numeric_limits<double>::infinity(), 1e-9);
      INFO(fam.name());
      CHECK(mass == Approx(1.0).margin(1e-6));
    }
  }
}

TEST_CASE("cdf/quantile round trip") {
  Rng rng = make_rng(17);
  for (FamilyId id : kAll) {
    const Family& fam = family(id);
    for (int rep = 0; rep < 8; ++rep) {
      const ParamVector t = random_params(id, rng);
      const double y = fam.sample(t, rng);
      const double u = fam.cdf(y, t);
      if (u <= 1e-14 || u >= 1.0 - 1e-14) continue;
      const double back = fam.quantile(u, t);
      INFO(fam.name() << " y=" << y);
      CHECK(std::abs(back - y) / y < 1e-8);
    }
  }
}

TEST_CASE("sampling matches the distribution") {
  // Dagum inverse cdf hits the scale at u = 2^{-c}
  const Family& da = family(FamilyId::dagum);
  CHECK(da.quantile(std::pow(2.0, -1.7), {2.5, 3.0, 1.7}) == Approx(3.0).epsilon(1e-10));

  Rng rng = make_rng(99);
  SECTION("log-normal mean of logs") {
    const ParamVector t{0.7, 1.3};
    std::vector<double> logs(100000);
    for (auto& v : logs) v = std::log(family(FamilyId::lognormal).sample(t, rng));
    const auto ms = oracles::mean_se(logs);
    CHECK(std::abs(ms.mean - 0.7) < 3.0 * ms.se);
  }
  SECTION("gamma draws pass a KS test") {
    const ParamVector t{2.0, 3.0};
    const Family& ga = family(FamilyId::gamma);
    std::vector<double> draws(10000);
    for (auto& v : draws) v = ga.sample(t, rng);
    const double d =
        oracles::ks_statistic(draws, [&](double y) { return ga.cdf(y, t); });
    CHECK(d < oracles::ks_critical(10000.0, 0.01));
  }
  SECTION("inverse gaussian draws pass a KS test") {
    const ParamVector t{1.4, 0.6};
    const Family& ig = family(FamilyId::inverse_gaussian);
    std::vector<double> draws(10000);
    for (auto& v : draws) v = ig.sample(t, rng);
    const double d =
        oracles::ks_statistic(draws, [&](double y) { return ig.cdf(y, t); });
    CHECK(d < oracles::ks_critical(10000.0, 0.01));
  }
}

TEST_CASE("score pinned values and finite differences") {
  CHECK(family(FamilyId::lognormal).score(std::exp(1.0), {0.0, 1.0}, 0) ==
        Approx(1.0).epsilon(1e-12));

  Rng rng = make_rng(31);
  for (FamilyId id : kAll) {
    const Family& fam = family(id);
    for (int k = 0; k < fam.param_count(); ++k) {
      for (int rep = 0; rep < 50; ++rep) {
        const ParamVector t = random_params(id, rng);
        const double y = fam.sample(t, rng);
        const double analytic = fam.score(y, t, k);
        const double fd = oracles::fd_score(fam, y, t, k);
        INFO(fam.name() << " k=" << k << " y=" << y);
        CHECK(std::abs(analytic - fd) / std::max(1.0, std::abs(analytic)) < 1e-6);
      }
    }
  }
}

TEST_CASE("score has mean zero under the model") {
  Rng rng = make_rng(47);
  for (FamilyId id : kAll) {
    const Family& fam = family(id);
    const ParamVector t = random_params(id, rng);
    for (int k = 0; k < fam.param_count(); ++k) {
      std::vector<double> scores(40000);
      Rng draw_rng = make_rng(900 + static_cast<int>(id) * 10 + k);
      for (auto& s : scores) s = fam.score(fam.sample(t, draw_rng), t, k);
      const auto ms = oracles::mean_se(scores);
      INFO(fam.name() << " k=" << k);
      CHECK(std::abs(ms.mean) < 3.0 * ms.se);
    }
  }
}

TEST_CASE("expected weights: pinned values, positivity, Bartlett identity") {
  const Family& ln = family(FamilyId::lognormal);
  CHECK(ln.expected_weight({0.3, 2.5}, 0) == Approx(1.0 / 2.5).epsilon(1e-12));
  CHECK(ln.expected_weight({-1.0, 0.4}, 1) == Approx(0.5).epsilon(1e-12));
  CHECK(family(FamilyId::dagum).expected_weight({2.0, 1.0, 1.0}, 0) ==
        Approx((3.0 + M_PI * M_PI) / 9.0).epsilon(1e-10));

  Rng rng = make_rng(53);
  for (FamilyId id : kAll) {
    const Family& fam = family(id);
    for (int k = 0; k < fam.param_count(); ++k) {
      for (int rep = 0; rep < 3; ++rep) {
        const ParamVector t = random_params(id, rng);
        const double w = fam.expected_weight(t, k);
        REQUIRE(w > 0.0);

        Rng draw_rng = make_rng(1700 + 100 * static_cast<int>(id) + 10 * k + rep);
        std::vector<double> curv(40000), sq(40000);
        for (size_t i = 0; i < curv.size(); ++i) {
          const double y = fam.sample(t, draw_rng);
          curv[i] = oracles::fd_neg_hessian(fam, y, t, k);
          const double v = fam.score(y, t, k);
          sq[i] = v * v;
        }
        const auto mc = oracles::mean_se(curv);
        INFO(fam.name() << " k=" << k << " w=" << w << " mc=" << mc.mean);
        CHECK(std::abs(mc.mean - w) < 3.0 * std::max(mc.se, 1e-4));
        // Bartlett: Var(score) = expected weight
        const auto vs = oracles::mean_se(sq);
        CHECK(std::abs(vs.mean - w) < 3.0 * std::max(vs.se, 1e-4));
      }
    }
  }
}

TEST_CASE("squared-density integrals: closed forms vs quadrature") {
  Rng rng = make_rng(61);
  for (FamilyId id : kAll) {
    const Family& fam = family(id);
    for (int rep = 0; rep < 5; ++rep) {
      ParamVector t = random_params(id, rng);
      if (id == FamilyId::gamma) t[1] = std::max(t[1], 0.8);
      if (id == FamilyId::dagum && t[0] * 2.0 * t[2] <= 1.2) t[0] = 1.0 / t[2];
      const double med = fam.quantile(0.5, t);
      auto p2 = [&](double y) { return std::exp(2.0 * fam.log_density(y, t)); };
      const double quad = integrate(p2, 0.0, med, 1e-10) +
                          integrate(p2, med, std::numeric_limits<double>::infinity(), 1e-10);
      INFO(fam.name());
      CHECK(fam.sq_density_integral(t) == Approx(quad).epsilon(1e-7));
    }
  }
  CHECK_THROWS_AS(family(FamilyId::gamma).sq_density_integral({1.0, 0.4}), NumericError);
  CHECK_THROWS_AS(family(FamilyId::dagum).sq_density_integral({0.4, 1.0, 1.0}), NumericError);
}

TEST_CASE("vectorised kernels agree with the scalar api") {
  Rng rng = make_rng(77);
  const Index n = 64;
  for (FamilyId id : kAll) {
    const Family& fam = family(id);
    const int kk = fam.param_count();
    ParamArrays t;
    t.count = kk;
    Array y(n);
    for (int k = 0; k < kk; ++k) t.col[k].resize(n);
    for (Index i = 0; i < n; ++i) {
      const ParamVector ti = random_params(id, rng);
      for (int k = 0; k < kk; ++k) t.col[k][i] = ti[k];
      y[i] = fam.sample(ti, rng);
    }
    const Obs obs{y};
    double sum = 0.0;
    for (Index i = 0; i < n; ++i) sum += fam.log_density(y[i], t.at(i));
    CHECK(fam.log_density_sum(obs, t) == Approx(sum).epsilon(1e-11));
    for (int k = 0; k < kk; ++k) {
      Array v, w;
      fam.score_weight(obs, t, k, v, w);
      for (Index i = 0; i < n; ++i) {
        const ParamVector ti = t.at(i);
        CHECK(v[i] == Approx(fam.score(y[i], ti, k)).epsilon(1e-10).margin(1e-12));
        CHECK(w[i] == Approx(fam.expected_weight(ti, k)).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("moment initialisation lands inside the parameter space") {
  Rng rng = make_rng(83);
  for (FamilyId id : kAll) {
    const Family& fam = family(id);
    const ParamVector truth = random_params(id, rng);
    Array y(500);
    for (Index i = 0; i < y.size(); ++i) y[i] = fam.sample(truth, rng);
    const ParamVector init = fam.moment_init(y);
    for (int k = 0; k < fam.param_count(); ++k) {
      if (fam.link(k) == Link::log_link) CHECK(init[k] > 0.0);
      CHECK(std::isfinite(init[k]));
    }
    // usable as a starting point
    CHECK(std::isfinite(fam.log_density(y[0], init)));
  }
}
