#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dina/cox.hpp"
#include "dina/glm.hpp"

using namespace dina;

namespace {

CoxDesign small_design(bool with_const) {
  Eigen::VectorXd x(8), times(8), events(8);
  x << -1.0, -0.5, -0.2, 0.1, 0.3, 0.6, 0.8, 1.0;
  times << 2.0, 3.0, 1.5, 4.0, 2.5, 5.0, 3.5, 1.0;
  events << 1, 0, 1, 1, 0, 1, 1, 1;
  CoxDesign d;
  d.design = with_const ? with_intercept(x) : Eigen::MatrixXd(x);
  d.times = times;
  d.events = events;
  return d;
}

}  // namespace

TEST_CASE("full likelihood value by hand") {
  // two subjects, Lambda(y) = y: (1/n) sum [delta*eta - y e^eta]
  CoxDesign d;
  d.design = Eigen::MatrixXd(2, 1);
  d.design << 1.0, -1.0;
  d.times = Eigen::VectorXd(2);
  d.times << 2.0, 3.0;
  d.events = Eigen::VectorXd(2);
  d.events << 1.0, 0.0;
  Eigen::VectorXd b(1);
  b << 0.5;
  const double expect = 0.5 * ((1.0 * 0.5 - 2.0 * std::exp(0.5)) + (0.0 - 3.0 * std::exp(-0.5)));
  CHECK(cox_full_loglik(d, BaselineHazard::power(1.0), b) == doctest::Approx(expect));
}

TEST_CASE("full likelihood fit matches reference values") {
  // same maximizer as a Poisson regression of the event indicator with
  // offset log Lambda(Y)
  const CoxDesign d = small_design(true);
  const GlmFit fit = fit_cox_full(d, BaselineHazard::power(1.0));
  CHECK(fit.coef[0] == doctest::Approx(-1.341921673530281).epsilon(1e-6));
  CHECK(fit.coef[1] == doctest::Approx(0.100498887573877).epsilon(1e-6));

  GlmSpec spec;
  spec.family = Family::poisson();
  spec.design = d.design;
  spec.offset = d.times.array().log();
  const GlmFit pois = fit_glm(spec, d.events);
  CHECK((fit.coef - pois.coef).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("partial likelihood value by hand") {
  // three subjects, all events, times 1 < 2 < 3, eta = x*b
  CoxDesign d;
  d.design = Eigen::MatrixXd(3, 1);
  d.design << 0.0, 1.0, -1.0;
  d.times = Eigen::VectorXd(3);
  d.times << 2.0, 1.0, 3.0;
  d.events = Eigen::VectorXd::Ones(3);
  Eigen::VectorXd b(1);
  b << 0.7;
  const double e0 = 1.0, e1 = std::exp(0.7), e2 = std::exp(-0.7);
  // event at t=1: risk {all}; t=2: risk {0, 2}; t=3: risk {2}
  const double expect =
      (std::log(e1 / (e0 + e1 + e2)) + std::log(e0 / (e0 + e2)) + std::log(e2 / e2)) / 3.0;
  CHECK(cox_partial_loglik(d, b) == doctest::Approx(expect));
}

TEST_CASE("partial likelihood fit matches reference values") {
  const CoxDesign d = small_design(false);
  const GlmFit fit = fit_cox_partial(d);
  CHECK(fit.coef[0] == doctest::Approx(-0.267022617730139).epsilon(1e-6));
  CHECK(cox_partial_loglik(d, fit.coef) ==
        doctest::Approx(-7.561547763747836 / 8.0).epsilon(1e-9));
}

TEST_CASE("partial likelihood is offset-shift invariant") {
  CoxDesign d = small_design(false);
  const GlmFit base = fit_cox_partial(d);
  d.offset = Eigen::VectorXd::Constant(8, 3.7);
  const GlmFit shifted = fit_cox_partial(d);
  CHECK(shifted.coef[0] == doctest::Approx(base.coef[0]).epsilon(1e-7));
}

TEST_CASE("no events is rejected") {
  CoxDesign d = small_design(false);
  d.events.setZero();
  CHECK_THROWS_AS(fit_cox_partial(d), SolverError);
}

TEST_CASE("not-censored probabilities, closed forms") {
  const BaselineHazard bh = BaselineHazard::power(1.0);
  CHECK(uncensored_prob(NoCensoring{}, bh, 0.3) == doctest::Approx(1.0));
  // fixed horizon T: P(Y <= T) = 1 - exp(-Lambda(T) e^eta)
  const double T = std::log(2.0);
  CHECK(uncensored_prob(SinglyCensored{T}, bh, 0.0) == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(uncensored_prob(SinglyCensored{2.0}, bh, 0.4) ==
        doctest::Approx(1.0 - std::exp(-2.0 * std::exp(0.4))).epsilon(1e-8));
}

TEST_CASE("not-censored probabilities agree with simulation") {
  const BaselineHazard bh = BaselineHazard::power(1.0);
  const Family fam = Family::cox_full(BaselineHazard::power(1.0));
  CounterRng rng(21);
  for (const CensoringMechanism mech :
       {CensoringMechanism{UniformOn{2.0}}, CensoringMechanism{WeibullCensoring{0.8, 1.5}}}) {
    for (double eta : {-0.5, 0.0, 0.7}) {
      const int n = 200000;
      int unc = 0;
      for (int i = 0; i < n; ++i) {
        const double t = fam.sample(eta, rng);
        const double c = sample_censoring(mech, rng);
        if (c >= t) ++unc;
      }
      CHECK(static_cast<double>(unc) / n ==
            doctest::Approx(uncensored_prob(mech, bh, eta)).epsilon(0.01));
    }
  }
}

TEST_CASE("quadrature on known integrals") {
  CHECK(integrate([](double t) { return t * t; }, 0.0, 3.0) == doctest::Approx(9.0).epsilon(1e-9));
  CHECK(integrate([](double t) { return std::exp(-t); }, 0.0, 50.0) ==
        doctest::Approx(1.0).epsilon(1e-8));
  CHECK(integrate([](double t) { return std::sin(t); }, 0.0, 3.14159265358979323846) ==
        doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("censoring classifier tracks the censoring rate") {
  // monotone censoring in x1: higher x1 -> longer survival -> more censoring
  const Family fam = Family::cox_full(BaselineHazard::power(1.0));
  CounterRng rng(13);
  const int n = 20000;
  Dataset data;
  data.family = fam;
  data.X.resize(n, 1);
  data.w.resize(n);
  data.y.resize(n);
  data.delta = Eigen::VectorXd(n);
  for (int i = 0; i < n; ++i) {
    data.X(i, 0) = rng.uniform(-1, 1);
    data.w[i] = rng.bernoulli(0.5) ? 1 : 0;
    const double eta = -data.X(i, 0);
    const double t = fam.sample(eta, rng);
    const double c = sample_censoring(UniformOn{2.0}, rng);
    data.y[i] = std::min(t, c);
    (*data.delta)[i] = c >= t ? 1.0 : 0.0;
  }
  const auto p_hat = estimate_uncensored_classifier(data);
  const BaselineHazard bh = BaselineHazard::power(1.0);
  Eigen::VectorXd x(1);
  for (double xv : {-0.8, 0.0, 0.8}) {
    x[0] = xv;
    const double truth = uncensored_prob(UniformOn{2.0}, bh, -xv);
    CHECK(p_hat(x, 0) == doctest::Approx(truth).epsilon(0.08));
    CHECK(p_hat(x, 1) == doctest::Approx(truth).epsilon(0.08));
  }
}

// model-implied moment: E[Delta - Lambda(Y^c) e^eta] = 0 under independent
// censoring
TEST_CASE("martingale moment is centered") {
  const Family fam = Family::cox_full(BaselineHazard::power(2.0));
  const BaselineHazard bh = BaselineHazard::power(2.0);
  CounterRng rng(17);
  const int n = 400000;
  double acc = 0.0, acc2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double eta = rng.uniform(-0.5, 0.5);
    const double t = fam.sample(eta, rng);
    const double c = sample_censoring(UniformOn{1.5}, rng);
    const double y = std::min(t, c);
    const double m = (c >= t ? 1.0 : 0.0) - bh.cum_hazard(y) * std::exp(eta);
    acc += m;
    acc2 += m * m;
  }
  const double mean = acc / n;
  const double se = std::sqrt((acc2 / n - mean * mean) / n);
  CHECK(std::abs(mean) < 4.0 * se);
}

TEST_CASE("weibull censoring draws follow the stated law") {
  CounterRng rng(29);
  const WeibullCensoring mech{2.0, 3.0};
  const int n = 100000;
  double below = 0;
  const double q = 0.4;  // P(C <= q) = 1 - exp(-(rate*q)^shape)
  for (int i = 0; i < n; ++i)
    if (sample_censoring(mech, rng) <= q) below += 1;
  CHECK(below / n == doctest::Approx(1.0 - std::exp(-std::pow(2.0 * q, 3.0))).epsilon(0.02));
}
