#include "dina/baselines.hpp"

#include <cmath>

namespace dina {

namespace {

DinaFit make_fit(const Dataset& data, Eigen::VectorXd beta, FoldDiagnostics diag) {
  DinaFit fit;
  fit.family = data.family;
  fit.n_arms = data.n_arms;
  fit.d = data.d();
  fit.beta = std::move(beta);
  fit.fold_estimates = {fit.beta};
  fit.diagnostics = {diag};
  return fit;
}

FittedFunction fit_arm_eta(const Dataset& data, int arm, const LearnerSpec& spec) {
  std::vector<Eigen::Index> idx;
  for (Eigen::Index i = 0; i < data.n(); ++i)
    if (data.w[i] == arm) idx.push_back(i);
  if (idx.empty())
    throw SolverError(SolverErrorKind::Degenerate, "baseline: empty treatment arm");
  const Dataset arm_data = data.subset(idx);
  return data.family.is_exponential()
             ? fit_learner(spec, data.family, arm_data.X, arm_data.y)
             : fit_cox_learner(spec, data.family, arm_data.X, arm_data.y, *arm_data.delta);
}

// second stage of the X-learner family: regress the treated responses on
// [1, x] with eta0_hat entering as a fixed offset
Eigen::VectorXd offset_regression_on_treated(const Dataset& data,
                                             const FittedFunction& eta0_hat,
                                             FoldDiagnostics* diag) {
  std::vector<Eigen::Index> treated;
  for (Eigen::Index i = 0; i < data.n(); ++i)
    if (data.w[i] == 1) treated.push_back(i);
  if (treated.empty())
    throw SolverError(SolverErrorKind::Degenerate, "fit_x: no treated rows");
  const Dataset sub = data.subset(treated);
  Eigen::VectorXd offset(sub.n());
  for (Eigen::Index i = 0; i < sub.n(); ++i) offset[i] = eta0_hat(sub.X.row(i));

  GlmFit fit;
  Eigen::VectorXd beta;
  if (data.family.is_exponential()) {
    GlmSpec spec;
    spec.family = data.family;
    spec.design = with_intercept(sub.X);
    spec.offset = offset;
    fit = fit_glm(spec, sub.y);
    beta = fit.coef;
  } else if (data.family.kind() == FamilyKind::CoxFull) {
    CoxDesign cd;
    cd.design = with_intercept(sub.X);
    cd.offset = offset;
    cd.times = sub.y;
    cd.events = *sub.delta;
    fit = fit_cox_full(cd, data.family.baseline());
    beta = fit.coef;
  } else {
    // partial likelihood: the intercept direction is invariant, fit slopes
    // only and report a zero intercept
    CoxDesign cd;
    cd.design = sub.X;
    cd.offset = offset;
    cd.times = sub.y;
    cd.events = *sub.delta;
    fit = fit_cox_partial(cd);
    beta = Eigen::VectorXd(sub.d() + 1);
    beta[0] = 0.0;
    beta.tail(sub.d()) = fit.coef;
  }
  if (diag) {
    diag->converged = fit.converged;
    diag->iterations = fit.iterations;
    diag->final_gradient_norm = fit.final_gradient_norm;
  }
  return beta;
}

}  // namespace

DinaFit fit_se(const Dataset& data, const LearnerSpec& outcome_spec) {
  data.validate();
  if (data.n_arms != 2) throw std::invalid_argument("fit_se: binary treatment required");
  const FittedFunction eta0 = fit_arm_eta(data, 0, outcome_spec);
  const FittedFunction eta1 = fit_arm_eta(data, 1, outcome_spec);

  Eigen::VectorXd diff(data.n());
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const Eigen::VectorXd x = data.X.row(i);
    diff[i] = eta1(x) - eta0(x);
  }
  GlmSpec spec;
  spec.family = Family::gaussian();
  spec.design = with_intercept(data.X);
  const GlmFit fit = fit_glm(spec, diff);
  FoldDiagnostics diag{fit.converged, fit.iterations, fit.final_gradient_norm};
  return make_fit(data, fit.coef, diag);
}

DinaFit fit_x(const Dataset& data, const LearnerSpec& outcome_spec) {
  data.validate();
  if (data.n_arms != 2) throw std::invalid_argument("fit_x: binary treatment required");
  const FittedFunction eta0 = fit_arm_eta(data, 0, outcome_spec);
  FoldDiagnostics diag;
  Eigen::VectorXd beta = offset_regression_on_treated(data, eta0, &diag);
  return make_fit(data, std::move(beta), diag);
}

DinaFit fit_pax(const Dataset& data, const LearnerSpec& propensity_spec,
                const LearnerSpec& outcome_spec) {
  data.validate();
  if (data.n_arms != 2) throw std::invalid_argument("fit_pax: binary treatment required");
  const FittedFunction e_hat = fit_propensity(propensity_spec, data.X, data.w);

  // augmented features [x, e(x), x*e(x)] for the control mean function
  const Eigen::Index d = data.d();
  auto augment = [e_hat, d](const Eigen::VectorXd& x) {
    Eigen::VectorXd z(2 * d + 1);
    const double e = e_hat(x);
    z.head(d) = x;
    z[d] = e;
    z.tail(d) = e * x;
    return z;
  };
  std::vector<Eigen::Index> controls;
  for (Eigen::Index i = 0; i < data.n(); ++i)
    if (data.w[i] == 0) controls.push_back(i);
  if (controls.empty())
    throw SolverError(SolverErrorKind::Degenerate, "fit_pax: no control rows");
  const Dataset ctrl = data.subset(controls);
  Eigen::MatrixXd Xa(ctrl.n(), 2 * d + 1);
  for (Eigen::Index i = 0; i < ctrl.n(); ++i) Xa.row(i) = augment(ctrl.X.row(i));

  FittedFunction eta0_aug;
  if (data.family.is_exponential()) {
    eta0_aug = fit_learner(outcome_spec, data.family, Xa, ctrl.y);
  } else {
    eta0_aug = fit_cox_learner(outcome_spec, data.family, Xa, ctrl.y, *ctrl.delta);
  }
  const FittedFunction eta0 = [eta0_aug, augment](const Eigen::VectorXd& x) {
    return eta0_aug(augment(x));
  };
  FoldDiagnostics diag;
  Eigen::VectorXd beta = offset_regression_on_treated(data, eta0, &diag);
  return make_fit(data, std::move(beta), diag);
}

DinaFit fit_e(const Dataset& data, const DinaOptions& options) {
  DinaOptions opts = options;
  opts.propensity_only_blend = true;
  return fit_dina(data, opts);
}

DinaFit fit_baseline(BaselineKind kind, const Dataset& data, const DinaOptions& options) {
  switch (kind) {
    case BaselineKind::SE:
      return fit_se(data, options.outcome);
    case BaselineKind::X:
      return fit_x(data, options.outcome);
    case BaselineKind::PAX:
      return fit_pax(data, options.propensity, options.outcome);
    case BaselineKind::E:
      return fit_e(data, options);
  }
  throw std::logic_error("fit_baseline: unknown kind");
}

}  // namespace dina
