#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dina/evaluation.hpp"

using namespace dina;

namespace {

DinaFit fit_with(const Eigen::VectorXd& beta) {
  DinaFit fit;
  fit.beta = beta;
  fit.d = beta.size() - 1;
  return fit;
}

SimConfig simple_config(int d) {
  SimConfig config;
  config.d = d;
  config.alpha = Eigen::VectorXd::Zero(d);
  config.beta_true = Eigen::VectorXd::Zero(d + 1);
  config.propensity_coefs = Eigen::VectorXd::Zero(d + 1);
  return config;
}

}  // namespace

TEST_CASE("effect error is zero for the exact coefficients") {
  SimConfig config = simple_config(2);
  config.beta_true << 0.5, -0.3, 0.2;
  const DinaFit fit = fit_with(config.beta_true);
  CHECK(tau_mse(fit, config, 5000, 1) == doctest::Approx(0.0));
}

TEST_CASE("a constant offset of one gives unit error") {
  SimConfig config = simple_config(2);
  config.beta_true << 0.5, -0.3, 0.2;
  Eigen::VectorXd beta = config.beta_true;
  beta[0] += 1.0;
  CHECK(tau_mse(fit_with(beta), config, 5000, 1) == doctest::Approx(1.0));
}

TEST_CASE("a unit slope error integrates the covariate second moment") {
  SimConfig config = simple_config(3);
  Eigen::VectorXd beta = config.beta_true;
  beta[1] += 1.0;  // error tau_hat - tau = x1, E[x1^2] = 1/3 on U[-1,1]
  CHECK(tau_mse(fit_with(beta), config, 200000, 2) == doctest::Approx(1.0 / 3.0).epsilon(0.02));
}

TEST_CASE("effect error rejects mismatched evaluation points") {
  const DinaFit fit = fit_with(Eigen::VectorXd::Zero(3));
  const Eigen::MatrixXd pts = Eigen::MatrixXd::Zero(10, 5);
  CHECK_THROWS_AS(
      tau_mse(fit, [](const Eigen::VectorXd&) { return 0.0; }, pts), std::invalid_argument);
}

TEST_CASE("signal-to-noise of a flat design is zero") {
  SimConfig config = simple_config(2);
  CHECK(std::abs(snr(config, 20000, 1)) < 1e-12);
}

TEST_CASE("signal-to-noise of a unit-slope gaussian design") {
  SimConfig config = simple_config(1);
  config.alpha << 1.0;  // E[Y|X] = x1, Var = 1/3; noise variance 1
  CHECK(snr(config, 300000, 3) == doctest::Approx(1.0 / 3.0).epsilon(0.02));
}

TEST_CASE("resampling a constant estimator gives a degenerate interval") {
  Dataset data;
  data.family = Family::gaussian();
  data.X = Eigen::MatrixXd::Random(50, 1);
  data.w = Eigen::VectorXi::Zero(50);
  for (int i = 0; i < 25; ++i) data.w[i] = 1;
  data.y = Eigen::VectorXd::Random(50);
  Eigen::VectorXd c(2);
  c << 1.5, -2.0;
  const Estimator est = [c](const Dataset&) { return c; };
  const BootstrapResult r = bootstrap_ci(data, est, c, 50, 0.95, 1);
  CHECK(r.se.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  CHECK((r.ci_lo - c).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  CHECK((r.ci_hi - c).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("resampled intervals are deterministic and ordered") {
  CounterRng rng(4);
  const int n = 300;
  Dataset data;
  data.family = Family::gaussian();
  data.X.resize(n, 1);
  data.w.resize(n);
  data.y.resize(n);
  for (int i = 0; i < n; ++i) {
    data.X(i, 0) = rng.uniform(-1, 1);
    data.w[i] = rng.bernoulli(0.5) ? 1 : 0;
    data.y[i] = 0.3 * data.X(i, 0) + rng.normal();
  }
  const Estimator est = [](const Dataset& d) -> Eigen::VectorXd {
    GlmSpec spec;
    spec.design = with_intercept(d.X);
    return fit_glm(spec, d.y).coef;
  };
  const Eigen::VectorXd orig = est(data);
  const BootstrapResult a = bootstrap_ci(data, est, orig, 60, 0.95, 9);
  const BootstrapResult b = bootstrap_ci(data, est, orig, 60, 0.95, 9);
  CHECK((a.se - b.se).cwiseAbs().maxCoeff() == 0.0);
  for (int j = 0; j < 2; ++j) {
    CHECK(a.ci_lo[j] <= a.ci_hi[j]);
    CHECK(a.ci_lo[j] < orig[j]);
    CHECK(a.ci_hi[j] > orig[j]);
  }
}

TEST_CASE("bootstrap spread tracks the analytic least-squares spread") {
  CounterRng rng(11);
  const int n = 2048;
  Dataset data;
  data.family = Family::gaussian();
  data.X.resize(n, 2);
  data.w = Eigen::VectorXi::Zero(n);
  data.y.resize(n);
  for (int i = 0; i < n; ++i) {
    data.X(i, 0) = rng.uniform(-1, 1);
    data.X(i, 1) = rng.uniform(-1, 1);
    data.w[i] = i % 2;
    data.y[i] = 0.5 + data.X(i, 0) - 0.5 * data.X(i, 1) + rng.normal();
  }
  const Estimator est = [](const Dataset& d) -> Eigen::VectorXd {
    GlmSpec spec;
    spec.design = with_intercept(d.X);
    return fit_glm(spec, d.y).coef;
  };
  const Eigen::VectorXd orig = est(data);
  const BootstrapResult r = bootstrap_ci(data, est, orig, 100, 0.95, 2);

  const Eigen::MatrixXd D = with_intercept(data.X);
  const Eigen::VectorXd resid = data.y - D * orig;
  const double sigma2 = resid.squaredNorm() / (n - 3);
  const Eigen::MatrixXd cov = sigma2 * (D.transpose() * D).inverse();
  for (int j = 0; j < 3; ++j)
    CHECK(r.se[j] == doctest::Approx(std::sqrt(cov(j, j))).epsilon(0.30));
}

TEST_CASE("failed resamples are redrawn and eventually fatal") {
  Dataset data;
  data.family = Family::gaussian();
  data.X = Eigen::MatrixXd::Random(20, 1);
  data.w = Eigen::VectorXi::Zero(20);
  data.y = Eigen::VectorXd::Random(20);
  const Estimator failing = [](const Dataset&) -> Eigen::VectorXd {
    throw SolverError(SolverErrorKind::NoConvergence, "always fails");
  };
  CHECK_THROWS_AS(bootstrap_ci(data, failing, Eigen::VectorXd::Zero(2), 10, 0.95, 1),
                  std::runtime_error);
}

TEST_CASE("agreement score identities") {
  Eigen::VectorXd tau(4);
  tau << 1.0, -2.0, 0.5, 3.0;
  CHECK(sensitivity_r2(tau, tau) == doctest::Approx(1.0));
  CHECK(sensitivity_r2(tau, Eigen::VectorXd::Zero(4)) == doctest::Approx(0.0));
  CHECK(sensitivity_r2(tau, 2.0 * tau) == doctest::Approx(0.0));
  CHECK(sensitivity_r2(tau, -tau) < 0.0);
  CHECK_THROWS_AS(sensitivity_r2(Eigen::VectorXd::Zero(4), tau), std::invalid_argument);
  CHECK_THROWS_AS(sensitivity_r2(tau, Eigen::VectorXd::Zero(3)), std::invalid_argument);
}

TEST_CASE("error-rate slopes on exact power laws") {
  std::vector<std::pair<double, double>> inv_n, flat;
  for (double n : {1000.0, 2000.0, 4000.0, 8000.0}) {
    inv_n.emplace_back(n, 7.0 / n);
    flat.emplace_back(n, 0.42);
  }
  CHECK(rate_regression(inv_n) == doctest::Approx(-1.0).epsilon(1e-10));
  CHECK(std::abs(rate_regression(flat)) < 1e-12);
  CHECK_THROWS_AS(rate_regression({{100.0, 1.0}, {200.0, 0.5}}), std::invalid_argument);
  CHECK_THROWS_AS(rate_regression({{100.0, 1.0}, {200.0, 0.5}, {400.0, -0.1}}),
                  std::invalid_argument);
}
