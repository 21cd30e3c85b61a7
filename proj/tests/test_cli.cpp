#include <catch2/catch_amalgamated.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "distreg/runner.hpp"

#ifndef DISTREG_CLI_PATH
#define DISTREG_CLI_PATH "distreg"
#endif
#ifndef DISTREG_DATA_DIR
#define DISTREG_DATA_DIR "data"
#endif

using namespace distreg;
using Catch::Approx;

namespace {

namespace fs = std::filesystem;

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "distreg_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string data_file(const std::string& name) {
  return (fs::path(DISTREG_DATA_DIR) / name).string();
}

std::string fit_config(const fs::path& out_dir) {
  return "dataset = " + data_file("synthetic_income.csv") +
         "\n"
         "adjacency = " +
         data_file("regions.adj") +
         "\n"
         "response = income\n"
         "family = dagum\n"
         "task = fit\n"
         "seed = 42\n"
         "out = " +
         out_dir.string() +
         "\n"
         "categorical = region, year\n"
         "[sampler]\n"
         "iterations = 600\n"
         "burnin = 200\n"
         "thin = 4\n"
         "[predictor b]\n"
         "intercept = true\n"
         "term = linear(educ)\n"
         "term = pspline(age; knots=8)\n"
         "term = spatial(region; covariates=east, structured=true, unstructured=true)\n"
         "term = random(year)\n"
         "[predictor a]\n"
         "intercept = true\n"
         "[predictor c]\n"
         "intercept = true\n"
         "[derived]\n"
         "quantities = mean, sd, gini, density\n"
         "profile = age=42, lmexp=19, educ=-1, east=-1\n"
         "curve = age\n";
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(DISTREG_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("run_fit emits the documented artifact set") {
  const fs::path out = fresh_dir("fit");
  const RunConfig cfg = parse_config_text(fit_config(out), "test");
  run_fit(cfg);

  for (const char* name :
       {"draws.csv", "report.txt", "dic.csv", "qq.csv", "pit.csv", "derived_summary.csv",
        "derived_density.csv", "derived_mean_curve.csv", "derived_sd_curve.csv",
        "derived_gini_curve.csv", "effect_b_pspline_age.csv", "effect_b_mrf_region.csv",
        "effect_b_iid_region.csv", "effect_b_random_year.csv"}) {
    INFO(name);
    CHECK(fs::exists(out / name));
  }

  SECTION("same seed reruns bitwise-identical draws") {
    const fs::path out2 = fresh_dir("fit_rerun");
    RunConfig cfg2 = parse_config_text(fit_config(out2), "test");
    run_fit(cfg2);
    CHECK(slurp(out / "draws.csv") == slurp(out2 / "draws.csv"));
  }

  SECTION("emitted DIC equals a recomputation from the emitted draws") {
    const rundetail::LoadedData loaded = rundetail::load(cfg);
    const AssembledModel model = assemble_predictors(cfg.model_spec(), loaded.data, loaded.adj());
    const PosteriorStore store = read_draws((out / "draws.csv").string(), model);
    const Obs obs{loaded.data.real("income").array()};
    const DicResult recomputed = dic(store, model, obs);
    const auto [header, dic_rows] = read_numeric_csv((out / "dic.csv").string());
    CHECK(dic_rows(0, 0) == Approx(recomputed.dic).epsilon(1e-12));
    const auto report = read_report((out / "report.txt").string());
    CHECK(std::stod(report.at("dic")) == Approx(recomputed.dic).epsilon(1e-12));
  }

  SECTION("every emitted numeric csv reparses with the tool's own reader") {
    for (const auto& entry : fs::directory_iterator(out)) {
      if (entry.path().extension() != ".csv") continue;
      std::ifstream in(entry.path());
      std::string header;
      std::getline(in, header);
      if (header.rfind("level,", 0) == 0 || header.rfind("quantity,", 0) == 0) {
        continue;  // tables with a label column
      }
      const auto [labels, values] = read_numeric_csv(entry.path().string());
      INFO(entry.path().filename());
      CHECK(values.rows() > 0);
    }
  }

  SECTION("report carries acceptance bookkeeping") {
    const auto report = read_report((out / "report.txt").string());
    CHECK(report.count("accept_rate.b.pspline(age)") == 1);
    CHECK(std::stod(report.at("eta_audit_max")) < 1e-8);
  }
}

TEST_CASE("run_cv writes per-fold and overall scores plus the alpha curve") {
  const fs::path out = fresh_dir("cv");
  std::string text = fit_config(out);
  text.replace(text.find("task = fit"), 10, "task = cv");
  RunConfig cfg = parse_config_text(text, "test", {"cv.folds=3", "sampler.iterations=400",
                                                   "sampler.burnin=100", "sampler.thin=4"});
  run_cv(cfg);
  REQUIRE(fs::exists(out / "scores.csv"));
  REQUIRE(fs::exists(out / "crps_alpha.csv"));

  std::ifstream in(out / "scores.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line ==
        "label,ls,qs,sps,crps,n_ls,n_density,n_crps,excluded_extrapolation,excluded_divergent");
  int rows = 0;
  std::string last;
  std::vector<std::string> labels;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    labels.push_back(line.substr(0, line.find(',')));
    ++rows;
  }
  CHECK(rows == 5);  // 3 folds + overall + pooled
  CHECK(labels.back() == "pooled");

  // the alpha curve integrates back to the pooled average CRPS
  const auto [header, curve] = read_numeric_csv((out / "crps_alpha.csv").string());
  const GaussLegendre& rule = quantile_rule();
  REQUIRE(curve.rows() == static_cast<Index>(rule.nodes.size()));
  double integral = 0.0;
  for (Index i = 0; i < curve.rows(); ++i) integral += rule.weights[static_cast<size_t>(i)] * curve(i, 1);

  std::ifstream again(out / "scores.csv");
  std::getline(again, line);
  double pooled_crps = 0.0;
  while (std::getline(again, line)) {
    if (line.rfind("pooled,", 0) == 0) {
      const auto cells = detail::split(line, ',');
      pooled_crps = std::stod(cells[4]);
    }
  }
  CHECK(integral == Approx(pooled_crps).epsilon(1e-9));
}

TEST_CASE("run_simulate with only the true family trivially selects it") {
  const fs::path out = fresh_dir("sim");
  const std::string text =
      "task = simulate\nseed = 5\nout = " + out.string() +
      "\n[sampler]\niterations = 500\nburnin = 150\nthin = 3\n"
      "[scenario]\n"
      "family = gamma\n"
      "n = 300\n"
      "replicates = 2\n"
      "candidates = gamma\n"
      "holdout = 0.2\n"
      "covariates = x:uniform\n"
      "terms = pspline(x; knots=8)\n"
      "truth.mu = const(0.8) + sin(x; amplitude=0.5)\n"
      "truth.sigma = const(1.0)\n";
  const RunConfig cfg = parse_config_text(text, "test");
  run_simulate(cfg);
  REQUIRE(fs::exists(out / "simulation.csv"));
  const auto [header, summary] = read_numeric_csv((out / "simulation_summary.csv").string());
  CHECK(summary(0, 1) == 2.0);  // completed
  CHECK(summary(0, 2) == 2.0);  // dic_correct: only candidate is the truth
  CHECK(std::isfinite(summary(0, 4)));
  CHECK(summary(0, 5) >= 0.0);
}

TEST_CASE("cli binary: exit codes") {
  const fs::path dir = fresh_dir("bin");

  SECTION("successful fit returns zero and writes artifacts") {
    const fs::path out = dir / "ok";
    std::ofstream(dir / "ok.cfg") << fit_config(out);
    const int code = run_cli("--config " + (dir / "ok.cfg").string() +
                             " --override sampler.iterations=300 --override sampler.burnin=100");
    CHECK(code == 0);
    CHECK(fs::exists(out / "draws.csv"));
  }

  SECTION("config errors exit with 2") {
    std::ofstream(dir / "bad.cfg") << "task = fit\nnonsense = 1\n";
    CHECK(run_cli("--config " + (dir / "bad.cfg").string()) == 2);
    CHECK(run_cli("--config " + (dir / "does_not_exist.cfg").string()) == 5);
  }

  SECTION("data errors exit with 3") {
    std::string text = fit_config(dir / "out3");
    const auto pos = text.find("term = linear(educ)");
    std::string broken = text;
    broken.replace(pos, 19, "term = linear(wage)");  // unknown column
    std::ofstream(dir / "col.cfg") << broken;
    CHECK(run_cli("--config " + (dir / "col.cfg").string()) == 3);
  }

  SECTION("task and seed flags act as overrides") {
    const fs::path out = dir / "flags";
    std::ofstream(dir / "flags.cfg") << fit_config(out);
    const int code =
        run_cli("--config " + (dir / "flags.cfg").string() +
                " --seed 7 --out " + out.string() +
                " --override sampler.iterations=300 --override sampler.burnin=100");
    CHECK(code == 0);
    const auto report = read_report((out / "report.txt").string());
    CHECK(report.at("seed") == "7");
  }
}
