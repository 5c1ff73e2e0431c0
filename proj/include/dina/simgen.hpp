#pragma once

#include <optional>
#include <string>

#include "dina/cox.hpp"
#include "dina/dataset.hpp"

namespace dina {

// unobserved additive term in both arms' natural parameters
struct LatentZ {
  double prob = 0.5;
  double effect = 1.0;
};

struct SimConfig {
  Eigen::Index n = 1024;
  int d = 5;
  Eigen::VectorXd alpha;             // eta0 slopes, length d
  Eigen::VectorXd beta_true;         // tau coefficients [intercept, slopes], length d+1
  double delta = 0.0;                // x1*x2 interaction in eta0
  Eigen::VectorXd propensity_coefs;  // logistic [intercept, slopes], length d+1
  Family family = Family::gaussian();
  CensoringMechanism censoring = NoCensoring{};
  std::optional<LatentZ> latent_z;
  std::uint64_t seed = 1;
  std::optional<std::uint64_t> noise_seed;  // defaults to seed (stream isolation hook)
  bool emit_partial = false;  // generate under CoxFull, label the dataset CoxPartial

  double eta0_at(const Eigen::VectorXd& x) const;
  double tau_at(const Eigen::VectorXd& x) const;
  double propensity_at(const Eigen::VectorXd& x) const;
};

struct GroundTruth {
  Eigen::VectorXd true_eta0, true_eta1, true_e, true_tau;  // per row, latent part excluded
  Eigen::VectorXd beta;                                    // [intercept, slopes]
};

struct SimData {
  Dataset data;
  GroundTruth truth;
};

SimData gen_dataset(const SimConfig& config);

// Fig.-1-style toy: Gaussian, eta0 = eta1 = x1^2, e(x) = sigmoid(x1), tau = 0
SimData gen_confounded_toy(Eigen::Index n, std::uint64_t seed);

// randomized design with a latent binary Z in both arms' natural parameters
SimData gen_noncollapsible(Eigen::Index n, const Family& family,
                           const Eigen::VectorXd& tau_coefs, std::uint64_t seed);

// artificial observational subsampling of a randomized dataset
Dataset subsample_observational(const Dataset& data,
                                const Eigen::VectorXd& artificial_propensity_coefs,
                                std::uint64_t seed);

// bisection on the mechanism scale until the Monte Carlo censored fraction
// is within 0.005 of the target
CensoringMechanism calibrate_censoring(const SimConfig& config, double target_fraction);

void write_truth_csv(const GroundTruth& truth, const std::string& path);

}  // namespace dina
