#pragma once

#include <limits>
#include <string>
#include <vector>

#include "dina/baselines.hpp"
#include "dina/evaluation.hpp"

namespace dina {

// flat key=value experiment configuration ('#' starts a comment)
struct RunConfig {
  std::string experiment;
  std::vector<Eigen::Index> n_grid = {4096};
  int replications = 50;
  std::uint64_t seed = 1;
  std::vector<std::string> methods;  // empty = experiment default
  std::string family = "poisson";    // where the experiment leaves it free
  int bootstrap_B = 100;
  int threads = 1;
  std::string out_dir = ".";

  // simulation overrides; empty vector = experiment default
  std::vector<double> alpha, beta, propensity;
  double delta = std::numeric_limits<double>::quiet_NaN();

  // censoring (Cox simulate runs): none | singly | uniform | weibull,
  // or a target censored fraction to calibrate the scale against
  std::string censoring = "none";
  double censoring_scale = 1.0;
  double censoring_shape = 1.0;
  double censoring_target = std::numeric_limits<double>::quiet_NaN();
};

CensoringMechanism censoring_from_config(const RunConfig& config);

RunConfig parse_run_config(const std::string& path);
RunConfig parse_run_config_text(const std::string& text, const std::string& origin = "<config>");

// Calibrated default designs. The randomized variants zero the propensity
// slopes; heterogeneous toggles the non-intercept part of the effect.
SimConfig default_design(FamilyKind family, Eigen::Index n, std::uint64_t seed,
                         bool confounded = true, bool heterogeneous = true);

Family family_by_name(const std::string& name);

// Runs one experiment, writing its CSV artifacts plus manifest.txt into
// config.out_dir. Known ids: toy-confounding, fig2, fig3, fig4, fig5, fig6,
// rate, table3, orthogonality, robustness-rate, sensitivity.
void run_experiment(const RunConfig& config);

// single-replication building blocks, shared with the acceptance tests

// tau-MSE of one method on one simulated dataset
double replicate_mse(const std::string& method, const SimConfig& config, std::uint64_t rep_seed,
                     const DinaOptions& options = {}, Eigen::Index eval_points = 20000);

DinaFit fit_method(const std::string& method, const Dataset& data, const DinaOptions& options);

}  // namespace dina
