#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dina/baselines.hpp"
#include "dina/simgen.hpp"

using namespace dina;

namespace {

SimConfig gaussian_config(Eigen::Index n, std::uint64_t seed, bool confounded) {
  SimConfig config;
  config.n = n;
  config.d = 2;
  config.alpha = Eigen::VectorXd(2);
  config.alpha << 0.5, -0.4;
  config.beta_true = Eigen::VectorXd(3);
  config.beta_true << 0.3, 0.2, -0.1;
  config.propensity_coefs = Eigen::VectorXd::Zero(3);
  if (confounded) config.propensity_coefs << 0.0, 0.8, -0.6;
  config.family = Family::gaussian();
  config.seed = seed;
  return config;
}

}  // namespace

TEST_CASE("identical arms give a zero separate-estimation effect") {
  // duplicate every row into both arms: the per-arm fits coincide
  CounterRng rng(2);
  const int n = 200;
  Dataset data;
  data.family = Family::gaussian();
  data.X.resize(2 * n, 1);
  data.w.resize(2 * n);
  data.y.resize(2 * n);
  for (int i = 0; i < n; ++i) {
    const double x = rng.uniform(-1, 1);
    const double y = 0.5 * x + rng.normal();
    data.X(2 * i, 0) = x;
    data.X(2 * i + 1, 0) = x;
    data.y[2 * i] = y;
    data.y[2 * i + 1] = y;
    data.w[2 * i] = 0;
    data.w[2 * i + 1] = 1;
  }
  const DinaFit fit = fit_se(data);
  CHECK(fit.beta.cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("offset learner recovers the effect under a correct control model") {
  const SimConfig config = gaussian_config(20000, 3, /*confounded=*/false);
  const SimData sim = gen_dataset(config);
  const DinaFit fit = fit_x(sim.data);
  CHECK((fit.beta - config.beta_true).cwiseAbs().maxCoeff() < 0.07);
}

TEST_CASE("no treated rows is an error") {
  SimConfig config = gaussian_config(200, 4, false);
  SimData sim = gen_dataset(config);
  sim.data.w.setZero();
  CHECK_THROWS_AS(fit_x(sim.data), SolverError);
}

TEST_CASE("propensity augmentation is inert under randomization") {
  const SimConfig config = gaussian_config(20000, 5, /*confounded=*/false);
  const SimData sim = gen_dataset(config);
  const DinaFit plain = fit_x(sim.data);
  const DinaFit augmented = fit_pax(sim.data);
  CHECK((plain.beta - augmented.beta).cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("propensity-weighted pipeline equals the full pipeline for gaussian data") {
  const SimConfig config = gaussian_config(4000, 6, /*confounded=*/true);
  const SimData sim = gen_dataset(config);
  DinaOptions opts;
  opts.seed = 17;
  const DinaFit a = fit_dina(sim.data, opts);
  const DinaFit b = fit_e(sim.data, opts);
  CHECK((a.beta - b.beta).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("all estimators emit coefficient vectors of the same shape") {
  const SimConfig config = gaussian_config(2000, 7, /*confounded=*/true);
  const SimData sim = gen_dataset(config);
  DinaOptions opts;
  for (BaselineKind kind : {BaselineKind::SE, BaselineKind::X, BaselineKind::PAX, BaselineKind::E}) {
    const DinaFit fit = fit_baseline(kind, sim.data, opts);
    CHECK(fit.beta.size() == 3);
    CHECK(fit.beta.allFinite());
  }
  CHECK(fit_dina(sim.data, opts).beta.size() == 3);
}

TEST_CASE("survival baselines run on both likelihoods") {
  SimConfig config;
  config.n = 3000;
  config.d = 2;
  config.alpha = Eigen::VectorXd(2);
  config.alpha << 0.4, -0.3;
  config.beta_true = Eigen::VectorXd(3);
  config.beta_true << 0.3, 0.2, 0.0;
  config.propensity_coefs = Eigen::VectorXd::Zero(3);
  config.family = Family::cox_full(BaselineHazard::power(1.0));
  config.censoring = UniformOn{3.0};
  config.seed = 8;

  const SimData full = gen_dataset(config);
  config.emit_partial = true;
  const SimData partial = gen_dataset(config);

  for (const Dataset* data : {&full.data, &partial.data}) {
    const DinaFit se = fit_se(*data);
    const DinaFit x = fit_x(*data);
    CHECK(se.beta.size() == 3);
    CHECK(x.beta.size() == 3);
    // slopes should land in a broad neighborhood of the truth
    CHECK(std::abs(se.beta[1] - 0.2) < 0.25);
    CHECK(std::abs(x.beta[1] - 0.2) < 0.25);
  }
}
