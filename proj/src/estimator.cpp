#include "dina/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dina {

namespace {

double clip_unit(double p) { return std::clamp(p, 0.01, 0.99); }

}  // namespace

BlendedNuisance blend_exponential(const Family& family, FittedFunction e_fn,
                                  FittedFunction eta0_fn, FittedFunction eta1_fn) {
  if (!family.is_exponential())
    throw std::invalid_argument("blend_exponential: exponential family required");
  BlendedNuisance b;
  b.a_hat = [family, e_fn, eta0_fn, eta1_fn](const Eigen::VectorXd& x) {
    const double e = e_fn(x);
    const double v1 = family.variance(eta1_fn(x));
    const double v0 = family.variance(eta0_fn(x));
    return clip_unit(e * v1 / (e * v1 + (1.0 - e) * v0));
  };
  b.nu_hat = [a = b.a_hat, eta0_fn, eta1_fn](const Eigen::VectorXd& x) {
    const double av = a(x);
    return av * eta1_fn(x) + (1.0 - av) * eta0_fn(x);
  };
  return b;
}

BlendedNuisance blend_cox(FittedFunction e_fn, FittedFunction eta0_fn, FittedFunction eta1_fn,
                          std::function<double(const Eigen::VectorXd&, int)> p_unc_fn) {
  BlendedNuisance b;
  b.a_hat = [e_fn, p_unc_fn](const Eigen::VectorXd& x) {
    const double e = e_fn(x);
    const double p1 = p_unc_fn(x, 1);
    const double p0 = p_unc_fn(x, 0);
    if (p0 <= 0.0 || p1 <= 0.0)
      throw std::invalid_argument("blend_cox: uncensored probabilities must be positive");
    return clip_unit(e * p1 / (e * p1 + (1.0 - e) * p0));
  };
  b.nu_hat = [a = b.a_hat, eta0_fn, eta1_fn](const Eigen::VectorXd& x) {
    const double av = a(x);
    return av * eta1_fn(x) + (1.0 - av) * eta0_fn(x);
  };
  return b;
}

BlendedNuisance blend_multi(const Family& family,
                            std::function<Eigen::VectorXd(const Eigen::VectorXd&)> e_fns,
                            std::vector<FittedFunction> eta_fns) {
  if (!family.is_exponential())
    throw std::invalid_argument("blend_multi: exponential family required");
  const int n_arms = static_cast<int>(eta_fns.size());
  if (n_arms < 2) throw std::invalid_argument("blend_multi: need at least two arms");
  BlendedNuisance b;
  auto full_weights = [family, e_fns, eta_fns, n_arms](const Eigen::VectorXd& x) {
    Eigen::VectorXd e = e_fns(x);
    if (e.size() != n_arms) throw std::invalid_argument("blend_multi: propensity arity mismatch");
    e = e.cwiseMax(0.01);
    e /= e.sum();
    Eigen::VectorXd ev(n_arms);
    for (int t = 0; t < n_arms; ++t) ev[t] = e[t] * family.variance(eta_fns[t](x));
    return (ev / ev.sum()).eval();  // a_0..a_K, sums to one
  };
  b.a_hat_multi = [full_weights, n_arms](const Eigen::VectorXd& x) {
    return full_weights(x).tail(n_arms - 1).eval();
  };
  b.nu_hat = [full_weights, eta_fns, n_arms](const Eigen::VectorXd& x) {
    const Eigen::VectorXd a = full_weights(x);
    double nu = 0.0;
    for (int t = 0; t < n_arms; ++t) nu += a[t] * eta_fns[t](x);
    return nu;
  };
  b.a_hat = [b_multi = b.a_hat_multi](const Eigen::VectorXd& x) {
    const Eigen::VectorXd a = b_multi(x);
    if (a.size() != 1) throw std::invalid_argument("a_hat: multi-valued fit, use a_hat_multi");
    return a[0];
  };
  return b;
}

std::pair<std::vector<Eigen::Index>, std::vector<Eigen::Index>> split_folds(Eigen::Index n,
                                                                            std::uint64_t seed) {
  std::vector<Eigen::Index> perm(n);
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  CounterRng rng = make_stream(seed, RngStream::kFolds);
  for (Eigen::Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Eigen::Index>(rng.next_u64() % static_cast<std::uint64_t>(i + 1));
    std::swap(perm[i], perm[j]);
  }
  const Eigen::Index n1 = (n + 1) / 2;
  return {std::vector<Eigen::Index>(perm.begin(), perm.begin() + n1),
          std::vector<Eigen::Index>(perm.begin() + n1, perm.end())};
}

namespace {

// design (w - a(x)) [1, x] and offset nu(x) for a binary-treatment fold
void build_second_stage(const Dataset& data, const FittedFunction& a_hat,
                        const FittedFunction& nu_hat, Eigen::MatrixXd* design,
                        Eigen::VectorXd* offset) {
  const Eigen::Index n = data.n();
  const Eigen::Index d = data.d();
  design->resize(n, d + 1);
  offset->resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd x = data.X.row(i);
    const double resid = static_cast<double>(data.w[i]) - a_hat(x);
    (*design)(i, 0) = resid;
    design->row(i).tail(d) = resid * x.transpose();
    (*offset)[i] = nu_hat(x);
  }
}

void record(FoldDiagnostics* diag, const GlmFit& fit) {
  if (!diag) return;
  diag->converged = fit.converged;
  diag->iterations = fit.iterations;
  diag->final_gradient_norm = fit.final_gradient_norm;
}

}  // namespace

Eigen::VectorXd dina_second_stage(const Dataset& data, const FittedFunction& a_hat,
                                  const FittedFunction& nu_hat, FoldDiagnostics* diag) {
  Eigen::MatrixXd design;
  Eigen::VectorXd offset;
  build_second_stage(data, a_hat, nu_hat, &design, &offset);
  GlmFit fit;
  if (data.family.is_exponential()) {
    GlmSpec spec;
    spec.family = data.family;
    spec.design = design;
    spec.offset = offset;
    fit = fit_glm(spec, data.y);
  } else {
    CoxDesign cd;
    cd.design = design;
    cd.offset = offset;
    cd.times = data.y;
    cd.events = *data.delta;
    fit = data.family.kind() == FamilyKind::CoxFull
              ? fit_cox_full(cd, data.family.baseline())
              : fit_cox_partial(cd);
  }
  record(diag, fit);
  return fit.coef;
}

Eigen::VectorXd dina_second_stage_multi(
    const Dataset& data, const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& a_hat,
    const FittedFunction& nu_hat, FoldDiagnostics* diag) {
  if (!data.family.is_exponential())
    throw std::invalid_argument("multi-valued second stage: exponential family required");
  const Eigen::Index n = data.n();
  const Eigen::Index d = data.d();
  const int K = data.n_arms - 1;
  Eigen::MatrixXd design(n, K * (d + 1));
  Eigen::VectorXd offset(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd x = data.X.row(i);
    const Eigen::VectorXd a = a_hat(x);
    for (int t = 1; t <= K; ++t) {
      const double resid = (data.w[i] == t ? 1.0 : 0.0) - a[t - 1];
      design(i, (t - 1) * (d + 1)) = resid;
      design.row(i).segment((t - 1) * (d + 1) + 1, d) = resid * x.transpose();
    }
    offset[i] = nu_hat(x);
  }
  GlmSpec spec;
  spec.family = data.family;
  spec.design = design;
  spec.offset = offset;
  const GlmFit fit = fit_glm(spec, data.y);
  record(diag, fit);
  return fit.coef;
}

namespace {

NuisanceEstimates fit_nuisances(const Dataset& fold, const DinaOptions& options) {
  NuisanceEstimates nu;
  const int n_arms = fold.n_arms;

  if (options.oracle_e) {
    nu.e_hat = *options.oracle_e;
  } else if (n_arms == 2) {
    nu.e_hat = fit_propensity(options.propensity, fold.X, fold.w);
  } else {
    nu.e_hat_multi = fit_propensity_multi(fold.X, fold.w, n_arms);
  }

  if (options.oracle_eta) {
    nu.eta_hat = *options.oracle_eta;
  } else {
    nu.eta_hat.resize(n_arms);
    for (int arm = 0; arm < n_arms; ++arm) {
      std::vector<Eigen::Index> idx;
      for (Eigen::Index i = 0; i < fold.n(); ++i)
        if (fold.w[i] == arm) idx.push_back(i);
      if (idx.empty())
        throw SolverError(SolverErrorKind::Degenerate, "fit_dina: empty arm in nuisance fold");
      const Dataset arm_data = fold.subset(idx);
      nu.eta_hat[arm] =
          fold.family.is_exponential()
              ? fit_learner(options.outcome, fold.family, arm_data.X, arm_data.y)
              : fit_cox_learner(options.outcome, fold.family, arm_data.X, arm_data.y,
                                *arm_data.delta);
    }
  }

  if (fold.family.is_cox()) {
    if (options.known_censoring && fold.family.kind() == FamilyKind::CoxFull) {
      const CensoringMechanism mech = *options.known_censoring;
      const Family fam = fold.family;
      auto etas = nu.eta_hat;
      nu.uncensored_prob_hat = [mech, fam, etas](const Eigen::VectorXd& x, int arm) {
        return std::max(uncensored_prob(mech, fam.baseline(), etas[arm](x)), 1e-6);
      };
    } else {
      nu.uncensored_prob_hat = estimate_uncensored_classifier(fold);
    }
  }
  return nu;
}

BlendedNuisance blend_for(const Dataset& fold, const NuisanceEstimates& nu,
                          const DinaOptions& options) {
  if (fold.n_arms > 2)
    return blend_multi(fold.family, nu.e_hat_multi, nu.eta_hat);

  if (options.propensity_only_blend) {
    BlendedNuisance b;
    b.a_hat = nu.e_hat;
    b.nu_hat = [e = nu.e_hat, eta0 = nu.eta_hat[0], eta1 = nu.eta_hat[1]](
                   const Eigen::VectorXd& x) {
      const double ev = e(x);
      return (1.0 - ev) * eta0(x) + ev * eta1(x);
    };
    return b;
  }

  if (fold.family.is_exponential()) {
    if (options.gaussian_direct_nu && fold.family.kind() == FamilyKind::Gaussian) {
      BlendedNuisance b;
      b.a_hat = nu.e_hat;
      b.nu_hat = fit_learner(options.outcome, fold.family, fold.X, fold.y);
      return b;
    }
    return blend_exponential(fold.family, nu.e_hat, nu.eta_hat[0], nu.eta_hat[1]);
  }

  if (options.heavy_censoring_shortcut && fold.delta->mean() < 0.05) {
    // heavy censoring: the not-censored probability ratio tends to
    // exp(tau); take tau from a pilot fit on the classifier route
    DinaOptions pilot = options;
    pilot.heavy_censoring_shortcut = false;
    pilot.known_censoring.reset();
    const DinaFit pilot_fit = fit_dina(fold, pilot);
    BlendedNuisance b;
    b.a_hat = [e = nu.e_hat, pilot_fit](const Eigen::VectorXd& x) {
      const double ev = e(x);
      const double ratio = std::exp(std::clamp(tau_at(pilot_fit, x), -30.0, 30.0));
      return std::clamp(ev * ratio / (ev * ratio + 1.0 - ev), 0.01, 0.99);
    };
    b.nu_hat = [a = b.a_hat, eta0 = nu.eta_hat[0], eta1 = nu.eta_hat[1]](
                   const Eigen::VectorXd& x) {
      const double av = a(x);
      return av * eta1(x) + (1.0 - av) * eta0(x);
    };
    return b;
  }

  return blend_cox(nu.e_hat, nu.eta_hat[0], nu.eta_hat[1], nu.uncensored_prob_hat);
}

}  // namespace

DinaFit fit_dina(const Dataset& data, const DinaOptions& options) {
  data.validate();
  const Eigen::Index n = data.n();
  const Eigen::Index d = data.d();
  if (n < 2 * (d + 2)) throw std::invalid_argument("fit_dina: too few rows");

  const auto [fold1, fold2] = split_folds(n, options.seed);
  DinaFit result;
  result.family = data.family;
  result.n_arms = data.n_arms;
  result.d = d;

  for (int pass = 0; pass < 2; ++pass) {
    const Dataset nuisance_fold = data.subset(pass == 0 ? fold1 : fold2);
    const Dataset estimation_fold = data.subset(pass == 0 ? fold2 : fold1);
    const NuisanceEstimates nuis = fit_nuisances(nuisance_fold, options);
    const BlendedNuisance blend = blend_for(nuisance_fold, nuis, options);
    FoldDiagnostics diag;
    const Eigen::VectorXd beta =
        data.n_arms > 2
            ? dina_second_stage_multi(estimation_fold, blend.a_hat_multi, blend.nu_hat, &diag)
            : dina_second_stage(estimation_fold, blend.a_hat, blend.nu_hat, &diag);
    result.fold_estimates.push_back(beta);
    result.diagnostics.push_back(diag);
  }

  result.beta = 0.5 * (result.fold_estimates[0] + result.fold_estimates[1]);
  return result;
}

double tau_at(const DinaFit& fit, const Eigen::VectorXd& x) {
  if (fit.n_arms > 2)
    throw std::invalid_argument("tau_at: multi-valued fit, use tau_at_multi");
  if (x.size() != fit.d) throw std::invalid_argument("tau_at: dimension mismatch");
  return fit.beta[0] + fit.beta.tail(fit.d).dot(x);
}

Eigen::VectorXd tau_at_multi(const DinaFit& fit, const Eigen::VectorXd& x) {
  if (x.size() != fit.d) throw std::invalid_argument("tau_at_multi: dimension mismatch");
  const int K = fit.n_arms - 1;
  Eigen::VectorXd tau(K);
  for (int t = 0; t < K; ++t) {
    const auto block = fit.beta.segment(t * (fit.d + 1), fit.d + 1);
    tau[t] = block[0] + block.tail(fit.d).dot(x);
  }
  return tau;
}

}  // namespace dina
