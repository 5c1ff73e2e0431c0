#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "dina/family.hpp"

using namespace dina;

TEST_CASE("gaussian cumulant and derivatives") {
  Family fam = Family::gaussian();
  CHECK(fam.psi(0.0) == doctest::Approx(0.0));
  CHECK(fam.psi(2.0) == doctest::Approx(2.0));
  CHECK(fam.mu(1.7) == doctest::Approx(1.7));
  CHECK(fam.variance(-3.0) == doctest::Approx(1.0));
  CHECK(fam.log_lik(1.0, 2.0) == doctest::Approx(1.0 * 2.0 - 2.0));
}

TEST_CASE("bernoulli cumulant and derivatives") {
  Family fam = Family::bernoulli();
  CHECK(fam.psi(0.0) == doctest::Approx(std::log(2.0)));
  CHECK(fam.mu(0.0) == doctest::Approx(0.5));
  CHECK(fam.variance(0.0) == doctest::Approx(0.25));
  CHECK(fam.mu(std::log(3.0)) == doctest::Approx(0.75));
  CHECK(fam.variance(std::log(3.0)) == doctest::Approx(0.1875));
  CHECK(fam.log_lik(1.0, 0.4) == doctest::Approx(0.4 - log1pexp(0.4)));
  CHECK_THROWS_AS(fam.log_lik(0.5, 0.0), std::invalid_argument);
}

TEST_CASE("poisson cumulant and derivatives") {
  Family fam = Family::poisson();
  CHECK(fam.psi(0.5) == doctest::Approx(std::exp(0.5)));
  CHECK(fam.mu(1.2) == doctest::Approx(std::exp(1.2)));
  CHECK(fam.variance(1.2) == doctest::Approx(std::exp(1.2)));
  CHECK(fam.log_lik(2.0, 0.5) == doctest::Approx(2.0 * 0.5 - std::exp(0.5)));
  CHECK_THROWS_AS(fam.log_lik(-1.0, 0.0), std::invalid_argument);
}

TEST_CASE("mu and variance are the cumulant derivatives") {
  const double h = 1e-6;
  for (Family fam : {Family::gaussian(), Family::bernoulli(), Family::poisson()}) {
    for (double eta : {-2.0, -0.5, 0.0, 0.3, 1.5}) {
      const double dpsi = (fam.psi(eta + h) - fam.psi(eta - h)) / (2 * h);
      const double d2psi = (fam.psi(eta + h) - 2 * fam.psi(eta) + fam.psi(eta - h)) / (h * h);
      CHECK(fam.mu(eta) == doctest::Approx(dpsi).epsilon(1e-5));
      CHECK(fam.variance(eta) == doctest::Approx(d2psi).epsilon(1e-3));
      CHECK(fam.variance(eta) > 0.0);
    }
  }
}

TEST_CASE("power baseline hazard") {
  BaselineHazard bh = BaselineHazard::power(2.0);
  CHECK(bh.cum_hazard(2.0) == doctest::Approx(4.0));
  CHECK(bh.hazard(3.0) == doctest::Approx(6.0));
  CHECK(bh.inverse(9.0) == doctest::Approx(3.0));
  CHECK(bh.invert(4.0) == doctest::Approx(2.0).epsilon(1e-8));

  // invert falls back to bisection when no analytic inverse is supplied
  BaselineHazard no_inv = bh;
  no_inv.inverse = nullptr;
  CHECK(no_inv.invert(6.25) == doctest::Approx(2.5).epsilon(1e-8));
}

TEST_CASE("sampling moments") {
  CounterRng rng(42);
  Family g = Family::gaussian();
  Family p = Family::poisson();
  const int n = 50000;
  double gm = 0, gv = 0, pm = 0;
  for (int i = 0; i < n; ++i) {
    const double z = g.sample(1.5, rng);
    gm += z;
    gv += (z - 1.5) * (z - 1.5);
    pm += p.sample(0.7, rng);
  }
  CHECK(gm / n == doctest::Approx(1.5).epsilon(0.02));
  CHECK(gv / n == doctest::Approx(1.0).epsilon(0.05));
  CHECK(pm / n == doctest::Approx(std::exp(0.7)).epsilon(0.02));
}

// under a proportional-hazards model the transform Lambda(T) e^{eta} of the
// sampled time is standard exponential
TEST_CASE("survival sampling distribution") {
  Family fam = Family::cox_full(BaselineHazard::power(2.0));
  CounterRng rng(7);
  const int n = 4000;
  const double eta = 0.4;
  std::vector<double> u(n);
  for (int i = 0; i < n; ++i) {
    const double t = fam.sample(eta, rng);
    u[i] = 1.0 - std::exp(-fam.baseline().cum_hazard(t) * std::exp(eta));
  }
  std::sort(u.begin(), u.end());
  double ks = 0.0;
  for (int i = 0; i < n; ++i) {
    ks = std::max(ks, std::abs(u[i] - (i + 1.0) / n));
    ks = std::max(ks, std::abs(u[i] - static_cast<double>(i) / n));
  }
  CHECK(ks < 1.63 / std::sqrt(static_cast<double>(n)));  // 1% critical value
}

TEST_CASE("counter rng streams") {
  CounterRng a(123, 1), b(123, 1), c(123, 2);
  double same = 0, diff = 0;
  for (int i = 0; i < 100; ++i) {
    const double ua = a.uniform();
    same += std::abs(ua - b.uniform());
    diff += std::abs(ua - c.uniform());
    CHECK(ua > 0.0);
    CHECK(ua < 1.0);
  }
  CHECK(same == 0.0);
  CHECK(diff > 1.0);
}

TEST_CASE("rng normal moments") {
  CounterRng rng(5);
  const int n = 100000;
  double m = 0, v = 0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    m += z;
    v += z * z;
  }
  CHECK(std::abs(m / n) < 0.02);
  CHECK(v / n == doctest::Approx(1.0).epsilon(0.02));
}
