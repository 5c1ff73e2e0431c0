#include "dina/learners.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace dina {

LearnerSpec LearnerSpec::boost(int n_trees, double learning_rate, int max_depth) {
  if (n_trees < 1) throw std::invalid_argument("boost: n_trees >= 1 required");
  if (learning_rate < 0.0 || learning_rate > 1.0)
    throw std::invalid_argument("boost: 0 <= learning_rate <= 1 required");
  if (max_depth < 1) throw std::invalid_argument("boost: max_depth >= 1 required");
  LearnerSpec s;
  s.kind = LearnerKind::Boost;
  s.n_trees = n_trees;
  s.learning_rate = learning_rate;
  s.max_depth = max_depth;
  return s;
}

namespace {

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

struct Tree {
  std::vector<TreeNode> nodes;

  double eval(const Eigen::VectorXd& x) const {
    int i = 0;
    while (nodes[i].feature >= 0)
      i = x[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
    return nodes[i].value;
  }

  void scale(double s) {
    for (auto& n : nodes) n.value *= s;
  }
};

// Per-observation gradient/Hessian of the deviance at the current eta.
struct GradHess {
  std::function<double(Eigen::Index, double)> grad;  // (row, eta)
  std::function<double(Eigen::Index, double)> hess;
  std::function<double(Eigen::Index, double)> neg_loglik;
};

// exact greedy split: variance-reduction on the gradient residuals, ties
// broken by lowest feature index then lowest threshold
struct Split {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

Split best_split(const Eigen::MatrixXd& X, const Eigen::VectorXd& g,
                 const std::vector<Eigen::Index>& rows, int min_leaf) {
  Split best;
  const auto n = static_cast<Eigen::Index>(rows.size());
  if (n < 2 * min_leaf) return best;
  double total = 0.0, total_sq = 0.0;
  for (auto r : rows) {
    total += g[r];
    total_sq += g[r] * g[r];
  }
  const double parent_sse = total_sq - total * total / static_cast<double>(n);

  std::vector<Eigen::Index> order(rows);
  for (int f = 0; f < X.cols(); ++f) {
    std::sort(order.begin(), order.end(),
              [&](Eigen::Index a, Eigen::Index b) { return X(a, f) < X(b, f); });
    double left_sum = 0.0, left_sq = 0.0;
    for (Eigen::Index k = 0; k + 1 < n; ++k) {
      const Eigen::Index r = order[k];
      left_sum += g[r];
      left_sq += g[r] * g[r];
      if (k + 1 < min_leaf || n - (k + 1) < min_leaf) continue;
      const double xv = X(r, f);
      const double xnext = X(order[k + 1], f);
      if (xv == xnext) continue;
      const double nl = static_cast<double>(k + 1);
      const double nr = static_cast<double>(n - (k + 1));
      const double right_sum = total - left_sum;
      const double right_sq = total_sq - left_sq;
      const double sse = (left_sq - left_sum * left_sum / nl) +
                         (right_sq - right_sum * right_sum / nr);
      const double gain = parent_sse - sse;
      if (gain > best.gain + 1e-12) {
        best.feature = f;
        best.threshold = 0.5 * (xv + xnext);
        best.gain = gain;
      }
    }
  }
  return best;
}

int build_node(Tree& tree, const Eigen::MatrixXd& X, const Eigen::VectorXd& g,
               const Eigen::VectorXd& h, const std::vector<Eigen::Index>& rows, int depth,
               const LearnerSpec& spec) {
  const int idx = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();
  Split split;
  if (depth < spec.max_depth) split = best_split(X, g, rows, spec.min_leaf);
  if (split.feature < 0) {
    double gs = 0.0, hs = 0.0;
    for (auto r : rows) {
      gs += g[r];
      hs += h[r];
    }
    tree.nodes[idx].value = gs / std::max(hs, 1e-12);  // one Newton step per leaf
    return idx;
  }
  std::vector<Eigen::Index> left, right;
  for (auto r : rows)
    (X(r, split.feature) <= split.threshold ? left : right).push_back(r);
  tree.nodes[idx].feature = split.feature;
  tree.nodes[idx].threshold = split.threshold;
  const int l = build_node(tree, X, g, h, left, depth + 1, spec);
  const int r = build_node(tree, X, g, h, right, depth + 1, spec);
  tree.nodes[idx].left = l;
  tree.nodes[idx].right = r;
  return idx;
}

// intercept-only MLE by 1-d Newton on the deviance
double fit_intercept(const GradHess& gh, const Eigen::VectorXd& offsets, Eigen::Index n) {
  double c = 0.0;
  for (int iter = 0; iter < 100; ++iter) {
    double gs = 0.0, hs = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      gs += gh.grad(i, offsets[i] + c);
      hs += gh.hess(i, offsets[i] + c);
    }
    if (std::abs(gs) < 1e-10 * n) break;
    c += gs / std::max(hs, 1e-12);
    c = std::clamp(c, -30.0, 30.0);
  }
  return c;
}

FittedFunction boost_impl(const LearnerSpec& spec, const Eigen::MatrixXd& X,
                          const GradHess& gh, const Eigen::VectorXd& offsets,
                          BoostTrace* trace) {
  const Eigen::Index n = X.rows();
  const double intercept = fit_intercept(gh, offsets, n);
  Eigen::VectorXd eta = offsets.array() + intercept;

  auto deviance = [&](const Eigen::VectorXd& e) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) s += gh.neg_loglik(i, e[i]);
    return s / static_cast<double>(n);
  };
  double dev = deviance(eta);
  if (trace) trace->deviance.push_back(dev);

  auto trees = std::make_shared<std::vector<Tree>>();
  std::vector<Eigen::Index> all(n);
  std::iota(all.begin(), all.end(), Eigen::Index{0});
  Eigen::VectorXd g(n), h(n), contrib(n);
  for (int round = 0; round < spec.n_trees; ++round) {
    for (Eigen::Index i = 0; i < n; ++i) {
      g[i] = gh.grad(i, eta[i]);
      h[i] = gh.hess(i, eta[i]);
    }
    Tree tree;
    build_node(tree, X, g, h, all, 0, spec);
    tree.scale(spec.learning_rate);
    for (Eigen::Index i = 0; i < n; ++i) contrib[i] = tree.eval(X.row(i));
    // keep the training deviance monotone: halve the round if it overshoots
    double cand = deviance(eta + contrib);
    int guard = 0;
    while (cand > dev && guard++ < 12) {
      tree.scale(0.5);
      contrib *= 0.5;
      cand = deviance(eta + contrib);
    }
    if (cand > dev) {
      tree.scale(0.0);
      cand = dev;
    } else {
      eta += contrib;
    }
    dev = cand;
    if (trace) trace->deviance.push_back(dev);
    trees->push_back(std::move(tree));
  }

  return [trees, intercept](const Eigen::VectorXd& x) {
    double v = intercept;
    for (const auto& t : *trees) v += t.eval(x);
    return v;
  };
}

GradHess exp_family_gradhess(const Family& family, const Eigen::VectorXd& y) {
  GradHess gh;
  gh.grad = [&family, y](Eigen::Index i, double eta) { return y[i] - family.mu(eta); };
  gh.hess = [&family, y](Eigen::Index, double eta) { return family.variance(eta); };
  gh.neg_loglik = [&family, y](Eigen::Index i, double eta) {
    return family.psi(eta) - y[i] * eta;
  };
  return gh;
}

}  // namespace

FittedFunction fit_boost_traced(const LearnerSpec& spec, const Family& family,
                                const Eigen::MatrixXd& X, const Eigen::VectorXd& targets,
                                const Eigen::VectorXd& offsets, BoostTrace* trace) {
  if (!family.is_exponential())
    throw std::invalid_argument("fit_boost_traced: exponential family required");
  const Eigen::VectorXd off =
      offsets.size() ? offsets : Eigen::VectorXd::Zero(X.rows()).eval();
  return boost_impl(spec, X, exp_family_gradhess(family, targets), off, trace);
}

FittedFunction fit_learner(const LearnerSpec& spec, const Family& family,
                           const Eigen::MatrixXd& X, const Eigen::VectorXd& targets,
                           const Eigen::VectorXd& offsets) {
  if (!family.is_exponential())
    throw std::invalid_argument("fit_learner: use fit_cox_learner for Cox families");
  if (spec.kind == LearnerKind::Boost)
    return fit_boost_traced(spec, family, X, targets, offsets, nullptr);
  GlmSpec gs;
  gs.family = family;
  gs.design = with_intercept(X);
  if (offsets.size()) gs.offset = offsets;
  const GlmFit fit = fit_glm(gs, targets);
  const Eigen::VectorXd coef = fit.coef;
  return [coef](const Eigen::VectorXd& x) {
    return coef[0] + coef.tail(coef.size() - 1).dot(x);
  };
}

FittedFunction fit_cox_learner(const LearnerSpec& spec, const Family& family,
                               const Eigen::MatrixXd& X, const Eigen::VectorXd& times,
                               const Eigen::VectorXd& events) {
  if (!family.is_cox()) throw std::invalid_argument("fit_cox_learner: Cox family required");
  if (family.kind() == FamilyKind::CoxFull) {
    if (spec.kind == LearnerKind::Boost) {
      // full-likelihood deviance == Poisson deviance with response Delta
      // and offset log Lambda(Y^c)
      const Eigen::Index n = X.rows();
      Eigen::VectorXd off(n);
      for (Eigen::Index i = 0; i < n; ++i)
        off[i] = std::log(std::max(family.baseline().cum_hazard(times[i]), 1e-300));
      FittedFunction f =
          fit_boost_traced(spec, Family::poisson(), X, events, off, nullptr);
      return f;
    }
    CoxDesign d;
    d.design = with_intercept(X);
    d.times = times;
    d.events = events;
    const GlmFit fit = fit_cox_full(d, family.baseline());
    const Eigen::VectorXd coef = fit.coef;
    return [coef](const Eigen::VectorXd& x) {
      return coef[0] + coef.tail(coef.size() - 1).dot(x);
    };
  }
  // Partial likelihood: linear index without intercept (identified up to a
  // constant). Boosting is not supported on this path and falls back.
  CoxDesign d;
  d.design = X;
  d.times = times;
  d.events = events;
  const GlmFit fit = fit_cox_partial(d);
  const Eigen::VectorXd coef = fit.coef;
  return [coef](const Eigen::VectorXd& x) { return coef.dot(x); };
}

FittedFunction fit_propensity(const LearnerSpec& spec, const Eigen::MatrixXd& X,
                              const Eigen::VectorXi& W) {
  const Eigen::Index n = X.rows();
  if (W.size() != n) throw std::invalid_argument("fit_propensity: size mismatch");
  Eigen::VectorXd w01(n);
  bool has0 = false, has1 = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (W[i] != 0 && W[i] != 1)
      throw std::invalid_argument("fit_propensity: binary treatment required");
    w01[i] = W[i];
    (W[i] ? has1 : has0) = true;
  }
  if (!has0 || !has1)
    throw SolverError(SolverErrorKind::Degenerate, "fit_propensity: single-class treatment");
  const auto clip = [](double p) { return std::clamp(p, 0.01, 0.99); };
  if (spec.kind == LearnerKind::Boost) {
    FittedFunction f = fit_boost_traced(spec, Family::bernoulli(), X, w01, {}, nullptr);
    return [f, clip](const Eigen::VectorXd& x) { return clip(sigmoid(f(x))); };
  }
  GlmSpec gs;
  gs.family = Family::bernoulli();
  gs.design = with_intercept(X);
  GlmFit fit;
  try {
    fit = fit_glm(gs, w01);
  } catch (const SolverError&) {
    gs.ridge_penalty = 1e-4;
    fit = fit_glm(gs, w01);
  }
  const Eigen::VectorXd coef = fit.coef;
  return [coef, clip](const Eigen::VectorXd& x) {
    return clip(sigmoid(coef[0] + coef.tail(coef.size() - 1).dot(x)));
  };
}

std::function<Eigen::VectorXd(const Eigen::VectorXd&)> fit_propensity_multi(
    const Eigen::MatrixXd& X, const Eigen::VectorXi& W, int n_arms) {
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols() + 1;
  const int K = n_arms - 1;  // class 0 is the reference
  if (K < 1) throw std::invalid_argument("fit_propensity_multi: n_arms >= 2 required");
  std::vector<int> counts(n_arms, 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (W[i] < 0 || W[i] >= n_arms)
      throw std::invalid_argument("fit_propensity_multi: arm out of range");
    ++counts[W[i]];
  }
  for (int t = 0; t < n_arms; ++t)
    if (counts[t] == 0)
      throw SolverError(SolverErrorKind::Degenerate, "fit_propensity_multi: empty arm");

  const Eigen::MatrixXd D = with_intercept(X);
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(K * p);  // stacked class scores
  auto probs_at = [&](const Eigen::VectorXd& th, Eigen::Index i) {
    Eigen::VectorXd s(K + 1);
    s[0] = 0.0;
    for (int t = 1; t <= K; ++t) s[t] = D.row(i).dot(th.segment((t - 1) * p, p));
    const double m = s.maxCoeff();
    Eigen::VectorXd e = (s.array() - m).exp();
    return (e / e.sum()).eval();
  };
  auto loglik = [&](const Eigen::VectorXd& th) {
    double ll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) ll += std::log(probs_at(th, i)[W[i]]);
    return ll / static_cast<double>(n);
  };

  double ll = loglik(theta);
  for (int iter = 0; iter < 100; ++iter) {
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(K * p);
    Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(K * p, K * p);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::VectorXd pi = probs_at(theta, i);
      for (int t = 1; t <= K; ++t) {
        const double ind = W[i] == t ? 1.0 : 0.0;
        grad.segment((t - 1) * p, p) += (ind - pi[t]) * D.row(i).transpose();
        for (int s = 1; s <= K; ++s) {
          const double wts = pi[t] * ((t == s ? 1.0 : 0.0) - pi[s]);
          hess.block((t - 1) * p, (s - 1) * p, p, p) +=
              wts * D.row(i).transpose() * D.row(i);
        }
      }
    }
    grad /= static_cast<double>(n);
    hess /= static_cast<double>(n);
    if (grad.lpNorm<Eigen::Infinity>() < 1e-8) break;
    hess.diagonal().array() += 1e-10;
    Eigen::VectorXd step = hess.ldlt().solve(grad);
    double scale = 1.0;
    for (int h = 0; h < 30; ++h) {
      const double cand = loglik(theta + scale * step);
      if (std::isfinite(cand) && cand >= ll) {
        theta += scale * step;
        ll = cand;
        break;
      }
      scale *= 0.5;
    }
    if (theta.lpNorm<Eigen::Infinity>() > 1e3)
      throw SolverError(SolverErrorKind::Separation, "fit_propensity_multi: separation");
  }

  const Eigen::VectorXd th = theta;
  const Eigen::Index d = X.cols();
  return [th, K, p, d](const Eigen::VectorXd& x) {
    if (x.size() != d) throw std::invalid_argument("propensity: bad x dimension");
    Eigen::VectorXd s(K + 1);
    s[0] = 0.0;
    for (int t = 1; t <= K; ++t) {
      const auto seg = th.segment((t - 1) * p, p);
      s[t] = seg[0] + seg.tail(p - 1).dot(x);
    }
    const double m = s.maxCoeff();
    Eigen::VectorXd e = (s.array() - m).exp();
    Eigen::VectorXd pr = e / e.sum();
    for (int t = 0; t <= K; ++t) pr[t] = std::clamp(pr[t], 0.01, 0.99);
    return (pr / pr.sum()).eval();
  };
}

}  // namespace dina
