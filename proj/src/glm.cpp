#include "dina/glm.hpp"

#include <cmath>

namespace dina {

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& X) {
  Eigen::MatrixXd D(X.rows(), X.cols() + 1);
  D.col(0).setOnes();
  D.rightCols(X.cols()) = X;
  return D;
}

namespace {

Eigen::VectorXd effective_offset(const GlmSpec& spec) {
  if (spec.offset.size() == 0) return Eigen::VectorXd::Zero(spec.design.rows());
  if (spec.offset.size() != spec.design.rows())
    throw std::invalid_argument("fit_glm: offset length != design rows");
  return spec.offset;
}

}  // namespace

double glm_loglik(const GlmSpec& spec, const Eigen::VectorXd& y, const Eigen::VectorXd& coef) {
  const Eigen::VectorXd eta = effective_offset(spec) + spec.design * coef;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i)
    ll += y[i] * eta[i] - spec.family.psi(eta[i]);
  ll /= static_cast<double>(y.size());
  if (spec.ridge_penalty > 0.0) ll -= 0.5 * spec.ridge_penalty * coef.squaredNorm();
  return ll;
}

GlmFit fit_glm(const GlmSpec& spec, const Eigen::VectorXd& y) {
  if (!spec.family.is_exponential())
    throw std::invalid_argument("fit_glm: Cox families use the cox module solvers");
  const Eigen::Index n = spec.design.rows();
  const Eigen::Index p = spec.design.cols();
  if (y.size() != n) throw std::invalid_argument("fit_glm: y length != design rows");
  if (n < 1 || p < 1) throw std::invalid_argument("fit_glm: empty problem");
  if (spec.tol <= 0.0) throw std::invalid_argument("fit_glm: tol must be positive");
  const Eigen::VectorXd offset = effective_offset(spec);

  GlmFit fit;
  fit.coef = Eigen::VectorXd::Zero(p);
  double ll = glm_loglik(spec, y, fit.coef);

  // a gaussian likelihood is a bounded quadratic: the runaway-coefficient
  // check below would only misfire on ill-conditioned designs
  const bool cap_applies =
      spec.family.kind() != FamilyKind::Gaussian && spec.ridge_penalty == 0.0;

  Eigen::VectorXd eta(n), mu(n), var(n), grad(p);
  Eigen::MatrixXd hess(p, p);
  for (int iter = 1; iter <= spec.max_iter; ++iter) {
    eta = offset + spec.design * fit.coef;
    for (Eigen::Index i = 0; i < n; ++i) {
      mu[i] = spec.family.mu(eta[i]);
      var[i] = spec.family.variance(eta[i]);
    }
    grad = spec.design.transpose() * (y - mu) / static_cast<double>(n);
    if (spec.ridge_penalty > 0.0) grad -= spec.ridge_penalty * fit.coef;
    fit.final_gradient_norm = grad.lpNorm<Eigen::Infinity>();
    fit.iterations = iter - 1;
    if (fit.final_gradient_norm <= spec.tol) {
      if (cap_applies && fit.coef.lpNorm<Eigen::Infinity>() > spec.coef_cap)
        throw SolverError(SolverErrorKind::Separation,
                          "fit_glm: coefficient norm exceeded cap (likelihood unbounded?)");
      fit.converged = true;
      return fit;
    }

    hess = spec.design.transpose() * var.asDiagonal() * spec.design / static_cast<double>(n);
    if (spec.ridge_penalty > 0.0) hess.diagonal().array() += spec.ridge_penalty;

    Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
    Eigen::VectorXd step = ldlt.solve(grad);
    const bool bad_step = ldlt.info() != Eigen::Success || !step.allFinite() ||
                          step.dot(grad) <= 0.0;
    if (bad_step) {
      if (!spec.allow_ridge_fallback)
        throw SolverError(SolverErrorKind::RankDeficient, "fit_glm: singular Hessian");
      hess.diagonal().array() += 1e-8;
      step = hess.ldlt().solve(grad);
      fit.ridge_used = true;
      if (!step.allFinite())
        throw SolverError(SolverErrorKind::RankDeficient, "fit_glm: singular Hessian");
    }

    // step-halving line search: require ascent
    double scale = 1.0;
    bool accepted = false;
    for (int h = 0; h < 30; ++h) {
      const Eigen::VectorXd cand = fit.coef + scale * step;
      const double cand_ll = glm_loglik(spec, y, cand);
      if (std::isfinite(cand_ll) && cand_ll >= ll) {
        fit.coef = cand;
        ll = cand_ll;
        accepted = true;
        break;
      }
      scale *= 0.5;
    }
    // large-count fits can stall with the objective at rounding precision
    // while the gradient sits just above tol; accept those
    if (!accepted) {
      if (fit.final_gradient_norm <= spec.stall_tol) break;
      throw SolverError(SolverErrorKind::NoConvergence,
                        "fit_glm: no ascent step found (gradient " +
                            std::to_string(fit.final_gradient_norm) + ")");
    }
    if (cap_applies && fit.coef.lpNorm<Eigen::Infinity>() > spec.coef_cap)
      throw SolverError(SolverErrorKind::Separation,
                        "fit_glm: coefficient norm exceeded cap (likelihood unbounded?)");
  }
  if (fit.final_gradient_norm <= spec.stall_tol) {
    if (cap_applies && fit.coef.lpNorm<Eigen::Infinity>() > spec.coef_cap)
      throw SolverError(SolverErrorKind::Separation,
                        "fit_glm: coefficient norm exceeded cap (likelihood unbounded?)");
    fit.converged = true;
    return fit;
  }
  throw SolverError(SolverErrorKind::NoConvergence,
                    "fit_glm: max_iter reached (gradient " +
                        std::to_string(fit.final_gradient_norm) + ")");
}

Eigen::VectorXd predict_eta(const GlmFit& fit, const Eigen::MatrixXd& design,
                            const Eigen::VectorXd& offset) {
  if (design.cols() != fit.coef.size())
    throw std::invalid_argument("predict_eta: design columns != coef length");
  Eigen::VectorXd eta = design * fit.coef;
  if (offset.size() != 0) {
    if (offset.size() != design.rows())
      throw std::invalid_argument("predict_eta: offset length != design rows");
    eta += offset;
  }
  return eta;
}

}  // namespace dina
