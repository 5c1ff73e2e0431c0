#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

#include "dina/family.hpp"

namespace dina {

enum class SolverErrorKind { RankDeficient, Separation, NoConvergence, NoEvents, Degenerate };

class SolverError : public std::runtime_error {
 public:
  SolverError(SolverErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  SolverErrorKind kind() const { return kind_; }

 private:
  SolverErrorKind kind_;
};

struct GlmSpec {
  Family family = Family::gaussian();
  Eigen::MatrixXd design;
  Eigen::VectorXd offset;  // empty means all-zero
  int max_iter = 100;
  double tol = 1e-8;           // gradient max-norm
  double stall_tol = 1e-5;     // accept when ascent stalls below this gradient
  double ridge_penalty = 0.0;  // optional explicit L2 penalty on the objective
  double coef_cap = 1e3;       // separation detection threshold
  bool allow_ridge_fallback = true;
};

struct GlmFit {
  Eigen::VectorXd coef;
  bool converged = false;
  int iterations = 0;
  double final_gradient_norm = 0.0;
  bool ridge_used = false;
};

// Newton ascent with step-halving on the mean log-likelihood
// (1/n) sum_i [ y_i eta_i - psi(eta_i) ],  eta_i = offset_i + x_i . coef.
GlmFit fit_glm(const GlmSpec& spec, const Eigen::VectorXd& y);

Eigen::VectorXd predict_eta(const GlmFit& fit, const Eigen::MatrixXd& design,
                            const Eigen::VectorXd& offset = {});

// mean log-likelihood of the spec's objective at the given coefficients
double glm_loglik(const GlmSpec& spec, const Eigen::VectorXd& y, const Eigen::VectorXd& coef);

// [1 | X]
Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& X);

}  // namespace dina
