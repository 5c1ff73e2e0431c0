#pragma once

#include <string>
#include <utility>

#include "dina/estimator.hpp"
#include "dina/simgen.hpp"

namespace dina {

struct CoverageRow {
  std::string method;
  Eigen::Index sample_size = 0;
  int coefficient = 0;
  double coverage = 0.0;  // proportion of replications covering the truth
  double width = 0.0;     // mean CI width
};

struct BootstrapResult {
  int B = 0;
  Eigen::VectorXd se;
  Eigen::VectorXd ci_lo, ci_hi;
};

using Estimator = std::function<Eigen::VectorXd(const Dataset&)>;

// mean of (tau_hat(x) - tau(x))^2 over the supplied evaluation points
double tau_mse(const DinaFit& fit, const std::function<double(const Eigen::VectorXd&)>& tau_true,
               const Eigen::MatrixXd& eval_points);

// same, with a fresh U[-1,1]^d evaluation sample drawn from the config
double tau_mse(const DinaFit& fit, const SimConfig& config, Eigen::Index n_points = 100000,
               std::uint64_t seed = 1);

// Var(E[Y|X,W]) / E[Var(Y|X,W)] by Monte Carlo under the true model
double snr(const SimConfig& config, Eigen::Index n_draws = 100000, std::uint64_t seed = 1);

// Row resamples with replacement, full refit per resample; failed resamples
// are redrawn (at most 5B attempts in total). The interval is the normal
// one centered at original_beta: the resampled estimates supply only the
// spread, not the center.
BootstrapResult bootstrap_ci(const Dataset& data, const Estimator& estimator,
                             const Eigen::VectorXd& original_beta, int B = 100,
                             double level = 0.95, std::uint64_t seed = 1);

// 1 - sum (tau_hat - tau)^2 / sum tau^2
double sensitivity_r2(const Eigen::VectorXd& tau_oracle, const Eigen::VectorXd& tau_hat);

// least-squares slope of log MSE on log n
double rate_regression(const std::vector<std::pair<double, double>>& mse_by_n);

}  // namespace dina
