#include "dina/cox.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace dina {

namespace {

Eigen::VectorXd cox_offset(const CoxDesign& d) {
  if (d.offset.size() == 0) return Eigen::VectorXd::Zero(d.design.rows());
  if (d.offset.size() != d.design.rows())
    throw std::invalid_argument("cox: offset length != design rows");
  return d.offset;
}

void check_cox_design(const CoxDesign& d) {
  const Eigen::Index n = d.design.rows();
  if (d.times.size() != n || d.events.size() != n)
    throw std::invalid_argument("cox: times/events length != design rows");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (d.times[i] < 0.0) throw std::invalid_argument("cox: negative time");
    if (d.events[i] != 0.0 && d.events[i] != 1.0)
      throw std::invalid_argument("cox: events must be 0/1");
  }
}

// Generic concave-maximization skeleton shared by the full and partial
// likelihood fits. objective(coef, grad, hess) returns the mean
// log-likelihood and fills gradient and Hessian when non-null.
using CoxObjective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*,
                                          Eigen::MatrixXd*)>;

GlmFit newton_maximize(Eigen::Index p, const CoxObjective& objective,
                       const CoxSolverParams& params) {
  GlmFit fit;
  fit.coef = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd grad(p);
  Eigen::MatrixXd hess(p, p);
  double ll = objective(fit.coef, nullptr, nullptr);
  for (int iter = 1; iter <= params.max_iter; ++iter) {
    objective(fit.coef, &grad, &hess);
    if (params.ridge_penalty > 0.0) {
      grad -= params.ridge_penalty * fit.coef;
      hess.diagonal().array() += params.ridge_penalty;
    }
    fit.final_gradient_norm = grad.lpNorm<Eigen::Infinity>();
    fit.iterations = iter - 1;
    if (fit.final_gradient_norm <= params.tol) {
      fit.converged = true;
      return fit;
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(hess);
    Eigen::VectorXd step = ldlt.solve(grad);
    if (ldlt.info() != Eigen::Success || !step.allFinite() || step.dot(grad) <= 0.0) {
      hess.diagonal().array() += 1e-8;
      step = hess.ldlt().solve(grad);
      fit.ridge_used = true;
      if (!step.allFinite())
        throw SolverError(SolverErrorKind::RankDeficient, "cox: singular Hessian");
    }
    double scale = 1.0;
    bool accepted = false;
    for (int h = 0; h < 30; ++h) {
      const Eigen::VectorXd cand = fit.coef + scale * step;
      double cand_ll = objective(cand, nullptr, nullptr);
      if (params.ridge_penalty > 0.0)
        cand_ll -= 0.5 * params.ridge_penalty * cand.squaredNorm();
      const double cur_ll =
          params.ridge_penalty > 0.0 ? ll - 0.5 * params.ridge_penalty * fit.coef.squaredNorm()
                                     : ll;
      if (std::isfinite(cand_ll) && cand_ll >= cur_ll) {
        fit.coef = cand;
        ll = objective(fit.coef, nullptr, nullptr);
        accepted = true;
        break;
      }
      scale *= 0.5;
    }
    // objective improvements can hit rounding precision with the gradient
    // just above tol; accept those stalls
    if (!accepted) {
      if (fit.final_gradient_norm <= params.stall_tol) break;
      throw SolverError(SolverErrorKind::NoConvergence,
                        "cox: no ascent step found (gradient " +
                            std::to_string(fit.final_gradient_norm) + ")");
    }
    if (params.ridge_penalty == 0.0 && fit.coef.lpNorm<Eigen::Infinity>() > params.coef_cap)
      throw SolverError(SolverErrorKind::Separation,
                        "cox: coefficient norm exceeded cap (likelihood unbounded?)");
  }
  if (fit.final_gradient_norm <= params.stall_tol) {
    fit.converged = true;
    return fit;
  }
  throw SolverError(SolverErrorKind::NoConvergence,
                    "cox: max_iter reached (gradient " +
                        std::to_string(fit.final_gradient_norm) + ")");
}

}  // namespace

double cox_full_loglik(const CoxDesign& design, const BaselineHazard& baseline,
                       const Eigen::VectorXd& coef) {
  check_cox_design(design);
  const Eigen::VectorXd eta = cox_offset(design) + design.design * coef;
  const Eigen::Index n = design.design.rows();
  double ll = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    ll += design.events[i] * eta[i] - baseline.cum_hazard(design.times[i]) * std::exp(eta[i]);
  return ll / static_cast<double>(n);
}

GlmFit fit_cox_full(const CoxDesign& design, const BaselineHazard& baseline,
                    const CoxSolverParams& params) {
  check_cox_design(design);
  const Eigen::Index n = design.design.rows();
  const Eigen::Index p = design.design.cols();
  const Eigen::VectorXd offset = cox_offset(design);
  Eigen::VectorXd cumhaz(n);
  for (Eigen::Index i = 0; i < n; ++i) cumhaz[i] = baseline.cum_hazard(design.times[i]);

  CoxObjective obj = [&](const Eigen::VectorXd& coef, Eigen::VectorXd* grad,
                         Eigen::MatrixXd* hess) {
    const Eigen::VectorXd eta = offset + design.design * coef;
    double ll = 0.0;
    if (grad) grad->setZero();
    if (hess) hess->setZero();
    for (Eigen::Index i = 0; i < n; ++i) {
      const double rate = cumhaz[i] * std::exp(eta[i]);
      ll += design.events[i] * eta[i] - rate;
      if (grad) *grad += (design.events[i] - rate) * design.design.row(i).transpose();
      if (hess) *hess += rate * design.design.row(i).transpose() * design.design.row(i);
    }
    if (grad) *grad /= static_cast<double>(n);
    if (hess) *hess /= static_cast<double>(n);
    return ll / static_cast<double>(n);
  };
  return newton_maximize(p, obj, params);
}

double cox_partial_loglik(const CoxDesign& design, const Eigen::VectorXd& coef) {
  check_cox_design(design);
  const Eigen::Index n = design.design.rows();
  const Eigen::VectorXd eta = cox_offset(design) + design.design * coef;
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return design.times[a] > design.times[b]; });
  const double shift = eta.maxCoeff();
  double s0 = 0.0;
  double ll = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && design.times[order[j]] == design.times[order[i]]) {
      s0 += std::exp(eta[order[j]] - shift);
      ++j;
    }
    for (std::size_t k = i; k < j; ++k) {
      const Eigen::Index r = order[k];
      if (design.events[r] == 1.0) ll += eta[r] - (std::log(s0) + shift);
    }
    i = j;
  }
  return ll / static_cast<double>(n);
}

GlmFit fit_cox_partial(const CoxDesign& design, const CoxSolverParams& params) {
  check_cox_design(design);
  if (design.events.sum() == 0.0)
    throw SolverError(SolverErrorKind::NoEvents, "fit_cox_partial: no events");
  const Eigen::Index n = design.design.rows();
  const Eigen::Index p = design.design.cols();
  const Eigen::VectorXd offset = cox_offset(design);
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return design.times[a] > design.times[b]; });

  CoxObjective obj = [&, order](const Eigen::VectorXd& coef, Eigen::VectorXd* grad,
                                Eigen::MatrixXd* hess) {
    const Eigen::VectorXd eta = offset + design.design * coef;
    const double shift = eta.maxCoeff();
    double s0 = 0.0;
    Eigen::VectorXd s1 = Eigen::VectorXd::Zero(p);
    Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(p, p);
    double ll = 0.0;
    if (grad) grad->setZero();
    if (hess) hess->setZero();
    std::size_t i = 0;
    while (i < order.size()) {
      std::size_t j = i;
      while (j < order.size() && design.times[order[j]] == design.times[order[i]]) {
        const Eigen::Index r = order[j];
        const double wgt = std::exp(eta[r] - shift);
        s0 += wgt;
        if (grad) s1 += wgt * design.design.row(r).transpose();
        if (hess) s2 += wgt * design.design.row(r).transpose() * design.design.row(r);
        ++j;
      }
      for (std::size_t k = i; k < j; ++k) {
        const Eigen::Index r = order[k];
        if (design.events[r] != 1.0) continue;
        ll += eta[r] - (std::log(s0) + shift);
        if (grad) *grad += design.design.row(r).transpose() - s1 / s0;
        if (hess) {
          const Eigen::VectorXd m = s1 / s0;
          *hess += s2 / s0 - m * m.transpose();
        }
      }
      i = j;
    }
    if (grad) *grad /= static_cast<double>(n);
    if (hess) *hess /= static_cast<double>(n);
    return ll / static_cast<double>(n);
  };
  return newton_maximize(p, obj, params);
}

namespace {

// 15-point Kronrod nodes/weights with the embedded 7-point Gauss rule
constexpr double kKronrodNodes[8] = {
    0.0,
    0.207784955007898467600689403773245,
    0.405845151377397166906606412076961,
    0.586087235467691130294144838258730,
    0.741531185599394439863864773280788,
    0.864864423359769072789712788640926,
    0.949107912342758524526189684047851,
    0.991455371120812639206854697526329,
};
constexpr double kKronrodWeights[8] = {
    0.209482141084727828012999174891714,
    0.204432940075298892414161999234649,
    0.190350578064785409913256402421014,
    0.169004726639267902826583426598550,
    0.140653259715525918745189590510238,
    0.104790010322250183839876322541518,
    0.063092092629978553290700663189204,
    0.022935322010529224963732008058970,
};
constexpr double kGaussWeights[4] = {
    0.417959183673469387755102040816327,
    0.381830050505118944950369775488975,
    0.279705391489276667901467771423780,
    0.129484966168869693270611432679082,
};

void gk15(const std::function<double(double)>& f, double lo, double hi, double* kronrod,
          double* err) {
  const double c = 0.5 * (lo + hi);
  const double h = 0.5 * (hi - lo);
  double resk = 0.0, resg = 0.0;
  const double f0 = f(c);
  resk += kKronrodWeights[0] * f0;
  resg += kGaussWeights[0] * f0;
  for (int i = 1; i < 8; ++i) {
    const double x = h * kKronrodNodes[i];
    const double fsum = f(c - x) + f(c + x);
    resk += kKronrodWeights[i] * fsum;
    if (i % 2 == 0) resg += kGaussWeights[i / 2] * fsum;
  }
  *kronrod = resk * h;
  *err = std::abs((resk - resg) * h);
}

double integrate_rec(const std::function<double(double)>& f, double lo, double hi,
                     double abs_tol, int depth) {
  double val, err;
  gk15(f, lo, hi, &val, &err);
  if (err <= abs_tol || depth >= 40) {
    if (depth >= 40 && err > abs_tol)
      throw std::runtime_error("integrate: quadrature failed to converge");
    return val;
  }
  const double mid = 0.5 * (lo + hi);
  return integrate_rec(f, lo, mid, abs_tol / 2.0, depth + 1) +
         integrate_rec(f, mid, hi, abs_tol / 2.0, depth + 1);
}

}  // namespace

double integrate(const std::function<double(double)>& f, double lo, double hi,
                 double abs_tol) {
  if (hi <= lo) return 0.0;
  return integrate_rec(f, lo, hi, abs_tol, 0);
}

double sample_censoring(const CensoringMechanism& mech, CounterRng& rng) {
  return std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, NoCensoring>) {
          return std::numeric_limits<double>::infinity();
        } else if constexpr (std::is_same_v<T, SinglyCensored>) {
          return m.T;
        } else if constexpr (std::is_same_v<T, UniformOn>) {
          return rng.uniform(0.0, m.T);
        } else {
          // Weibull(rate r, shape k): C = E^{1/k} / r with E ~ Exp(1)
          return std::pow(rng.exponential(), 1.0 / m.shape) / m.rate;
        }
      },
      mech);
}

double uncensored_prob(const CensoringMechanism& mech, const BaselineHazard& baseline,
                       double eta) {
  const double rate = std::exp(eta);
  return std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, NoCensoring>) {
          return 1.0;
        } else if constexpr (std::is_same_v<T, SinglyCensored>) {
          if (m.T < 0.0) throw std::invalid_argument("SinglyCensored: negative T");
          return 1.0 - std::exp(-baseline.cum_hazard(m.T) * rate);
        } else if constexpr (std::is_same_v<T, UniformOn>) {
          if (m.T <= 0.0) throw std::invalid_argument("UniformOn: T must be positive");
          const double integral = integrate(
              [&](double c) { return std::exp(-baseline.cum_hazard(c) * rate); }, 0.0, m.T);
          return 1.0 - integral / m.T;
        } else {
          if (m.rate <= 0.0 || m.shape <= 0.0)
            throw std::invalid_argument("WeibullCensoring: rate, shape > 0 required");
          // truncate where the censoring density tail mass is < 1e-10
          const double c_max = std::pow(std::log(1e10), 1.0 / m.shape) / m.rate;
          const double integral = integrate(
              [&](double c) {
                const double rc = m.rate * c;
                return m.shape * m.rate * std::pow(rc, m.shape - 1.0) *
                       std::exp(-std::pow(rc, m.shape)) *
                       std::exp(-baseline.cum_hazard(c) * rate);
              },
              0.0, c_max);
          return 1.0 - integral;
        }
      },
      mech);
}

std::function<double(const Eigen::VectorXd&, int)> estimate_uncensored_classifier(
    const Dataset& data) {
  if (!data.family.is_cox() || !data.delta)
    throw std::invalid_argument("estimate_uncensored_classifier: Cox dataset required");
  const Eigen::VectorXd& delta = *data.delta;
  const Eigen::Index n = data.n();
  const double rate = delta.mean();
  const auto clip = [](double p) { return std::clamp(p, 1e-3, 0.999); };
  if (rate == 0.0 || rate == 1.0) {
    const double c = clip(rate);
    return [c](const Eigen::VectorXd&, int) { return c; };
  }

  // features [1, x, w, w*x]
  const Eigen::Index d = data.d();
  Eigen::MatrixXd D(n, 2 * d + 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    D(i, 0) = 1.0;
    D.row(i).segment(1, d) = data.X.row(i);
    D(i, d + 1) = static_cast<double>(data.w[i]);
    D.row(i).segment(d + 2, d) = static_cast<double>(data.w[i]) * data.X.row(i);
  }
  GlmSpec spec;
  spec.family = Family::bernoulli();
  spec.design = D;
  GlmFit fit;
  try {
    fit = fit_glm(spec, delta);
  } catch (const SolverError&) {
    // separated or collinear: refit with a small penalty to keep the
    // coefficients finite; predictions end up at the clip boundaries
    spec.ridge_penalty = 1e-4;
    fit = fit_glm(spec, delta);
  }
  const Eigen::VectorXd coef = fit.coef;
  return [coef, d, clip](const Eigen::VectorXd& x, int w) {
    if (x.size() != d) throw std::invalid_argument("uncensored classifier: bad x dimension");
    double eta = coef[0] + coef.segment(1, d).dot(x) + coef[d + 1] * w;
    eta += w * coef.segment(d + 2, d).dot(x);
    return clip(sigmoid(eta));
  };
}

}  // namespace dina
