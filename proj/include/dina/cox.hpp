#pragma once

#include <Eigen/Dense>
#include <functional>
#include <variant>

#include "dina/dataset.hpp"
#include "dina/glm.hpp"

namespace dina {

struct CoxDesign {
  Eigen::MatrixXd design;
  Eigen::VectorXd offset;  // empty means all-zero
  Eigen::VectorXd times;   // censored times Y^c >= 0
  Eigen::VectorXd events;  // Delta in {0,1}
};

struct CoxSolverParams {
  int max_iter = 100;
  double tol = 1e-8;
  double stall_tol = 1e-5;  // accept when ascent stalls below this gradient
  double ridge_penalty = 0.0;
  double coef_cap = 1e3;
};

// (1/n) sum_i [ Delta_i eta_i - Lambda(Y_i^c) e^{eta_i} ]; the Delta*log
// lambda(Y) term is coefficient-free and dropped.
double cox_full_loglik(const CoxDesign& design, const BaselineHazard& baseline,
                       const Eigen::VectorXd& coef);
GlmFit fit_cox_full(const CoxDesign& design, const BaselineHazard& baseline,
                    const CoxSolverParams& params = {});

// Breslow partial likelihood with risk sets {j : Y_j^c >= Y_i^c}
double cox_partial_loglik(const CoxDesign& design, const Eigen::VectorXd& coef);
GlmFit fit_cox_partial(const CoxDesign& design, const CoxSolverParams& params = {});

struct NoCensoring {};
struct SinglyCensored {
  double T;
};
struct UniformOn {
  double T;
};
struct WeibullCensoring {
  double rate;
  double shape;
};
using CensoringMechanism =
    std::variant<NoCensoring, SinglyCensored, UniformOn, WeibullCensoring>;

double sample_censoring(const CensoringMechanism& mech, CounterRng& rng);

// P(C >= Y | W = w, X = x) at natural parameter eta; integrals by adaptive
// Gauss-Kronrod quadrature to absolute error 1e-8.
double uncensored_prob(const CensoringMechanism& mech, const BaselineHazard& baseline,
                       double eta);

// Logistic regression of Delta on [1, x, w, w*x]; predictions clipped to
// [1e-3, 0.999]. Degenerate Delta falls back to the clipped empirical rate.
std::function<double(const Eigen::VectorXd&, int)> estimate_uncensored_classifier(
    const Dataset& data);

// adaptive G7-K15 quadrature
double integrate(const std::function<double(double)>& f, double lo, double hi,
                 double abs_tol = 1e-8);

}  // namespace dina
