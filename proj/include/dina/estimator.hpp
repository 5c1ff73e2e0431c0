#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "dina/dataset.hpp"
#include "dina/learners.hpp"

namespace dina {

// Fitted nuisances: propensity, per-arm natural parameters, and (Cox) the
// not-censored probability surface.
struct NuisanceEstimates {
  FittedFunction e_hat;  // binary treatments
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> e_hat_multi;  // K+1 arms
  std::vector<FittedFunction> eta_hat;                                 // per arm
  std::function<double(const Eigen::VectorXd&, int)> uncensored_prob_hat;
};

// The modified propensity a(x) and baseline mixture nu(x) plugged into the
// second-stage likelihood.
struct BlendedNuisance {
  FittedFunction a_hat;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> a_hat_multi;  // a_1..a_K
  FittedFunction nu_hat;
};

// a = e V1 / (e V1 + (1-e) V0), nu = a eta1 + (1-a) eta0
BlendedNuisance blend_exponential(const Family& family, FittedFunction e_fn,
                                  FittedFunction eta0_fn, FittedFunction eta1_fn);

// a = e p1 / (e p1 + (1-e) p0) with p_w the not-censored probabilities
BlendedNuisance blend_cox(FittedFunction e_fn, FittedFunction eta0_fn, FittedFunction eta1_fn,
                          std::function<double(const Eigen::VectorXd&, int)> p_unc_fn);

// a_t = e_t V_t / sum_s e_s V_s (t = 1..K), nu = sum_{t=0..K} a_t eta_t
BlendedNuisance blend_multi(const Family& family,
                            std::function<Eigen::VectorXd(const Eigen::VectorXd&)> e_fns,
                            std::vector<FittedFunction> eta_fns);

struct DinaOptions {
  std::uint64_t seed = 1;
  LearnerSpec propensity = LearnerSpec::glm();
  LearnerSpec outcome = LearnerSpec::glm();

  // a(x) = e(x) instead of the variance/censoring blend (the direct
  // R-learner extension)
  bool propensity_only_blend = false;

  // Cox: compute not-censored probabilities from a declared mechanism via
  // the closed forms / quadrature instead of the Delta-classifier
  std::optional<CensoringMechanism> known_censoring;

  // Gaussian only: estimate nu directly as one conditional-mean regression
  bool gaussian_direct_nu = false;

  // Cox: when the censored fraction exceeds 0.95, replace the probability
  // ratio by exp(tau) from a pilot fit
  bool heavy_censoring_shortcut = false;

  // test hooks: bypass nuisance estimation with known functions
  std::optional<FittedFunction> oracle_e;
  std::optional<std::vector<FittedFunction>> oracle_eta;
};

struct FoldDiagnostics {
  bool converged = false;
  int iterations = 0;
  double final_gradient_norm = 0.0;
};

struct DinaFit {
  // [intercept, covariate slopes]; for multi-valued treatments the arm
  // blocks beta_1..beta_K are stacked, each of length d+1
  Eigen::VectorXd beta;
  std::vector<Eigen::VectorXd> fold_estimates;
  std::vector<FoldDiagnostics> diagnostics;
  Family family = Family::gaussian();
  int n_arms = 2;
  Eigen::Index d = 0;
};

// Cross-fitted two-stage DINA estimator (binary or multi-valued W).
DinaFit fit_dina(const Dataset& data, const DinaOptions& options = {});

// Second stage alone on a full dataset with supplied blended nuisances;
// used by diagnostics and for oracle-nuisance experiments.
Eigen::VectorXd dina_second_stage(const Dataset& data, const FittedFunction& a_hat,
                                  const FittedFunction& nu_hat,
                                  FoldDiagnostics* diag = nullptr);
Eigen::VectorXd dina_second_stage_multi(
    const Dataset& data, const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& a_hat,
    const FittedFunction& nu_hat, FoldDiagnostics* diag = nullptr);

double tau_at(const DinaFit& fit, const Eigen::VectorXd& x);
Eigen::VectorXd tau_at_multi(const DinaFit& fit, const Eigen::VectorXd& x);

// seeded half/half split used by every cross-fitted estimator; odd n puts
// the extra row in fold one
std::pair<std::vector<Eigen::Index>, std::vector<Eigen::Index>> split_folds(Eigen::Index n,
                                                                            std::uint64_t seed);

}  // namespace dina
