#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dina/glm.hpp"
#include "dina/rng.hpp"

using namespace dina;

namespace {

Eigen::MatrixXd design8() {
  Eigen::VectorXd x(8);
  x << -1.0, -0.5, -0.2, 0.1, 0.3, 0.6, 0.8, 1.0;
  return with_intercept(x);
}

}  // namespace

TEST_CASE("gaussian fit equals least squares") {
  CounterRng rng(3);
  const int n = 200;
  Eigen::MatrixXd X(n, 3);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = rng.uniform(-1, 1);
    X(i, 2) = rng.normal();
    y[i] = 0.5 + X(i, 1) - 2.0 * X(i, 2) + rng.normal();
  }
  GlmSpec spec;
  spec.design = X;
  const GlmFit fit = fit_glm(spec, y);
  const Eigen::VectorXd ols = (X.transpose() * X).ldlt().solve(X.transpose() * y);
  CHECK((fit.coef - ols).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(fit.converged);
}

TEST_CASE("poisson fit matches reference values") {
  Eigen::VectorXd y(8);
  y << 0, 1, 1, 2, 1, 3, 2, 4;
  GlmSpec spec;
  spec.family = Family::poisson();
  spec.design = design8();
  const GlmFit fit = fit_glm(spec, y);
  CHECK(fit.coef[0] == doctest::Approx(0.171569168770013).epsilon(1e-7));
  CHECK(fit.coef[1] == doctest::Approx(1.137522105782284).epsilon(1e-7));
}

TEST_CASE("poisson fit with offset matches reference values") {
  Eigen::VectorXd y(8), off(8);
  y << 0, 1, 1, 2, 1, 3, 2, 4;
  off << 0.5, -0.2, 0.1, 0.0, 0.3, -0.1, 0.2, 0.4;
  GlmSpec spec;
  spec.family = Family::poisson();
  spec.design = design8();
  spec.offset = off;
  const GlmFit fit = fit_glm(spec, y);
  CHECK(fit.coef[0] == doctest::Approx(0.04306850439662).epsilon(1e-6));
  CHECK(fit.coef[1] == doctest::Approx(1.007628327477769).epsilon(1e-6));
}

TEST_CASE("logistic fit matches reference values") {
  Eigen::VectorXd y(8);
  y << 0, 0, 1, 0, 1, 1, 0, 1;
  GlmSpec spec;
  spec.family = Family::bernoulli();
  spec.design = design8();
  const GlmFit fit = fit_glm(spec, y);
  CHECK(fit.coef[0] == doctest::Approx(-0.258055313765163).epsilon(1e-6));
  CHECK(fit.coef[1] == doctest::Approx(1.670350324953265).epsilon(1e-6));
}

TEST_CASE("constant offset shifts the gaussian intercept") {
  CounterRng rng(9);
  const int n = 100;
  Eigen::MatrixXd X(n, 2);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = rng.uniform(-1, 1);
    y[i] = 1.0 + X(i, 1) + rng.normal();
  }
  GlmSpec plain;
  plain.design = X;
  GlmSpec shifted = plain;
  shifted.offset = Eigen::VectorXd::Constant(n, 2.5);
  const GlmFit a = fit_glm(plain, y);
  const GlmFit b = fit_glm(shifted, y);
  CHECK(b.coef[0] == doctest::Approx(a.coef[0] - 2.5).epsilon(1e-9));
  CHECK(b.coef[1] == doctest::Approx(a.coef[1]).epsilon(1e-9));
}

TEST_CASE("perfect separation is reported") {
  Eigen::VectorXd y(8);
  y << 0, 0, 0, 1, 1, 1, 1, 1;  // y = 1{x > 0}
  GlmSpec spec;
  spec.family = Family::bernoulli();
  spec.design = design8();
  spec.coef_cap = 100.0;
  CHECK_THROWS_AS(fit_glm(spec, y), SolverError);
  try {
    fit_glm(spec, y);
  } catch (const SolverError& e) {
    CHECK(e.kind() == SolverErrorKind::Separation);
  }
  // an explicit penalty restores a bounded objective
  spec.ridge_penalty = 1e-4;
  const GlmFit fit = fit_glm(spec, y);
  CHECK(fit.converged);
  CHECK(fit.coef.allFinite());
}

TEST_CASE("collinear designs still yield the least-squares prediction") {
  CounterRng rng(11);
  const int n = 60;
  Eigen::MatrixXd X(n, 3);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = rng.uniform(-1, 1);
    X(i, 2) = 2.0 * X(i, 1);  // exactly collinear
    y[i] = X(i, 1) + rng.normal();
  }
  GlmSpec spec;
  spec.design = X;
  const GlmFit fit = fit_glm(spec, y);
  CHECK(fit.coef.allFinite());
  // fitted values match the pseudoinverse solution even though the
  // coefficients themselves are not identified
  const Eigen::VectorXd pinv_coef =
      X.completeOrthogonalDecomposition().pseudoInverse() * y;
  CHECK((X * fit.coef - X * pinv_coef).cwiseAbs().maxCoeff() < 1e-7);

  // explicit penalty gives the unique ridge solution
  spec.ridge_penalty = 0.1;
  const GlmFit ridge = fit_glm(spec, y);
  const Eigen::MatrixXd H =
      X.transpose() * X / n + 0.1 * Eigen::MatrixXd::Identity(3, 3);
  const Eigen::VectorXd expect = H.ldlt().solve(X.transpose() * y / n);
  CHECK((ridge.coef - expect).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("predict_eta applies coefficients and offset") {
  GlmFit fit;
  fit.coef = Eigen::VectorXd(2);
  fit.coef << 1.0, 2.0;
  Eigen::MatrixXd X(2, 2);
  X << 1, 3, 1, -1;
  Eigen::VectorXd off(2);
  off << 0.5, 0.0;
  const Eigen::VectorXd eta = predict_eta(fit, X, off);
  CHECK(eta[0] == doctest::Approx(7.5));
  CHECK(eta[1] == doctest::Approx(-1.0));
}

TEST_CASE("loglik increases from zero to the fit") {
  Eigen::VectorXd y(8);
  y << 0, 1, 1, 2, 1, 3, 2, 4;
  GlmSpec spec;
  spec.family = Family::poisson();
  spec.design = design8();
  const GlmFit fit = fit_glm(spec, y);
  CHECK(glm_loglik(spec, y, fit.coef) > glm_loglik(spec, y, Eigen::VectorXd::Zero(2)));
}
