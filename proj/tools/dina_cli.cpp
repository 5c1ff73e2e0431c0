#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <iostream>

#include "dina/experiments.hpp"

namespace {

using namespace dina;

SimConfig sim_from_run_config(const RunConfig& config) {
  const Family fam = family_by_name(config.family);
  FamilyKind kind = fam.kind();
  if (config.family == "cox-partial") kind = FamilyKind::CoxPartial;
  SimConfig sim = default_design(kind, config.n_grid.front(), config.seed);
  if (!config.alpha.empty())
    sim.alpha = Eigen::Map<const Eigen::VectorXd>(config.alpha.data(), config.alpha.size());
  if (!config.beta.empty())
    sim.beta_true = Eigen::Map<const Eigen::VectorXd>(config.beta.data(), config.beta.size());
  if (!config.propensity.empty())
    sim.propensity_coefs =
        Eigen::Map<const Eigen::VectorXd>(config.propensity.data(), config.propensity.size());
  if (!std::isnan(config.delta)) sim.delta = config.delta;
  sim.d = static_cast<int>(sim.alpha.size());
  if (sim.family.is_cox()) {
    sim.censoring = censoring_from_config(config);
    if (!std::isnan(config.censoring_target))
      sim.censoring = calibrate_censoring(sim, config.censoring_target);
  }
  return sim;
}

int cmd_simulate(const std::string& config_path, std::uint64_t seed_flag, bool seed_set,
                 const std::string& out_dir) {
  RunConfig config = config_path.empty() ? RunConfig{.experiment = "simulate"}
                                         : parse_run_config(config_path);
  if (seed_set) config.seed = seed_flag;
  SimConfig sim = sim_from_run_config(config);
  sim.seed = config.seed;
  const SimData data = gen_dataset(sim);
  std::filesystem::create_directories(out_dir);
  write_dataset_csv(data.data, out_dir + "/data.csv");
  write_truth_csv(data.truth, out_dir + "/truth.csv");
  std::cout << "wrote " << out_dir << "/data.csv (" << data.data.n() << " rows)\n";
  return 0;
}

void print_fit(const DinaFit& fit, const BootstrapResult* boot) {
  std::cout.precision(10);
  std::cout << (boot ? "coefficient,estimate,ci_lo,ci_hi\n" : "coefficient,estimate\n");
  for (Eigen::Index j = 0; j < fit.beta.size(); ++j) {
    std::cout << (j == 0 ? "intercept" : "x" + std::to_string(j)) << ',' << fit.beta[j];
    if (boot) std::cout << ',' << boot->ci_lo[j] << ',' << boot->ci_hi[j];
    std::cout << '\n';
  }
}

int cmd_fit(const std::string& data_path, const std::string& family_name,
            const std::string& method, const std::string& learner, std::uint64_t seed,
            int bootstrap_B) {
  const Dataset data = read_dataset_csv(data_path, family_by_name(family_name));
  DinaOptions options;
  options.seed = seed;
  if (learner == "boost") {
    options.propensity = LearnerSpec::boost();
    options.outcome = LearnerSpec::boost();
  } else if (learner != "glm") {
    throw std::runtime_error("unknown learner '" + learner + "' (glm|boost)");
  }
  const DinaFit fit = fit_method(method, data, options);
  if (bootstrap_B > 0) {
    const Estimator est = [&](const Dataset& d) { return fit_method(method, d, options).beta; };
    const BootstrapResult boot = bootstrap_ci(data, est, fit.beta, bootstrap_B, 0.95, seed);
    print_fit(fit, &boot);
  } else {
    print_fit(fit, nullptr);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"difference-in-natural-parameters treatment effect estimation"};
  app.require_subcommand(1);

  std::string config_path, out_dir = ".", data_path;
  std::string family_name = "gaussian", method = "dina", learner = "glm";
  std::uint64_t seed = 1;
  int threads = 1, bootstrap_B = 0;

  auto* sim = app.add_subcommand("simulate", "generate a dataset and its ground truth");
  sim->add_option("--config", config_path, "key=value simulation config");
  auto* sim_seed = sim->add_option("--seed", seed, "RNG seed");
  sim->add_option("--out", out_dir, "output directory");

  auto* fit = app.add_subcommand("fit", "estimate effect coefficients from a CSV");
  fit->add_option("--data", data_path, "dataset CSV (x1..xd,w,y[,delta])")->required();
  fit->add_option("--family", family_name, "gaussian|bernoulli|poisson|cox|cox-partial");
  fit->add_option("--method", method, "dina|e|se|x|pax");
  fit->add_option("--learner", learner, "glm|boost");
  fit->add_option("--seed", seed, "RNG seed");
  fit->add_option("--bootstrap", bootstrap_B, "bootstrap resamples for CIs (0 = off)");

  auto* boot = app.add_subcommand("bootstrap", "fit with bootstrap CIs (B defaults to 100)");
  boot->add_option("--data", data_path, "dataset CSV")->required();
  boot->add_option("--family", family_name, "gaussian|bernoulli|poisson|cox|cox-partial");
  boot->add_option("--method", method, "dina|e|se|x|pax");
  boot->add_option("--learner", learner, "glm|boost");
  boot->add_option("--seed", seed, "RNG seed");
  boot->add_option("--bootstrap", bootstrap_B, "bootstrap resamples");

  auto* exp = app.add_subcommand("experiment", "run a configured experiment to CSV");
  exp->add_option("--config", config_path, "experiment config")->required();
  auto* exp_seed = exp->add_option("--seed", seed, "override config seed");
  auto* exp_out = exp->add_option("--out", out_dir, "override output directory");
  exp->add_option("--threads", threads, "worker threads (results are order-stable)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(config_path, seed, sim_seed->count() > 0, out_dir);
    if (fit->parsed()) return cmd_fit(data_path, family_name, method, learner, seed, bootstrap_B);
    if (boot->parsed())
      return cmd_fit(data_path, family_name, method, learner, seed,
                     bootstrap_B > 0 ? bootstrap_B : 100);
    if (exp->parsed()) {
      RunConfig config = parse_run_config(config_path);
      if (exp_seed->count() > 0) config.seed = seed;
      if (exp_out->count() > 0) config.out_dir = out_dir;
      config.threads = threads;
      run_experiment(config);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
