#pragma once

#include <Eigen/Dense>
#include <functional>

#include "dina/cox.hpp"
#include "dina/glm.hpp"

namespace dina {

// maps a covariate vector to a natural-parameter value (or probability for
// classifiers); deterministic and immutable once fitted
using FittedFunction = std::function<double(const Eigen::VectorXd&)>;

enum class LearnerKind { Glm, Boost };

struct LearnerSpec {
  LearnerKind kind = LearnerKind::Glm;
  // boosting configuration (ignored for Glm)
  int n_trees = 50;
  double learning_rate = 0.1;
  int max_depth = 3;
  int min_leaf = 5;

  static LearnerSpec glm() { return {}; }
  static LearnerSpec boost(int n_trees = 50, double learning_rate = 0.1, int max_depth = 3);
};

// Regression of targets on covariates under the family deviance, with an
// optional per-row offset. Glm fits [1, x]; Boost runs functional gradient
// boosting initialized at the intercept-only MLE.
FittedFunction fit_learner(const LearnerSpec& spec, const Family& family,
                           const Eigen::MatrixXd& X, const Eigen::VectorXd& targets,
                           const Eigen::VectorXd& offsets = {});

// Cox variant: full-likelihood deviance when the family carries a baseline
// (offset log Lambda(Y^c)); CoxPartial always uses the partial likelihood
// through the Glm route (no intercept; identified up to a constant).
FittedFunction fit_cox_learner(const LearnerSpec& spec, const Family& family,
                               const Eigen::MatrixXd& X, const Eigen::VectorXd& times,
                               const Eigen::VectorXd& events);

// binary propensity, clipped to [0.01, 0.99]
FittedFunction fit_propensity(const LearnerSpec& spec, const Eigen::MatrixXd& X,
                              const Eigen::VectorXi& W);

// multi-class generalized propensity via one multinomial logistic fit;
// component t of the result is P(T = t | x), clipped then renormalized
std::function<Eigen::VectorXd(const Eigen::VectorXd&)> fit_propensity_multi(
    const Eigen::MatrixXd& X, const Eigen::VectorXi& W, int n_arms);

// training deviances per boosting round (index 0 = after initialization);
// exposed for the monotonicity property
struct BoostTrace {
  std::vector<double> deviance;
};
FittedFunction fit_boost_traced(const LearnerSpec& spec, const Family& family,
                                const Eigen::MatrixXd& X, const Eigen::VectorXd& targets,
                                const Eigen::VectorXd& offsets, BoostTrace* trace);

}  // namespace dina
