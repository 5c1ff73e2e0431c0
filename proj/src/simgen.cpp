#include "dina/simgen.hpp"

#include <cmath>
#include <fstream>

namespace dina {

double SimConfig::eta0_at(const Eigen::VectorXd& x) const {
  double eta = alpha.size() ? alpha.dot(x) : 0.0;
  if (d >= 2) eta += delta * x[0] * x[1];
  return eta;
}

double SimConfig::tau_at(const Eigen::VectorXd& x) const {
  if (beta_true.size() == 0) return 0.0;
  return beta_true[0] + beta_true.tail(beta_true.size() - 1).dot(x);
}

double SimConfig::propensity_at(const Eigen::VectorXd& x) const {
  if (propensity_coefs.size() == 0) return 0.5;
  return sigmoid(propensity_coefs[0] + propensity_coefs.tail(propensity_coefs.size() - 1).dot(x));
}

SimData gen_dataset(const SimConfig& config) {
  if (config.n < 1) throw std::invalid_argument("gen_dataset: n >= 1 required");
  if (config.alpha.size() && config.alpha.size() != config.d)
    throw std::invalid_argument("gen_dataset: alpha length != d");
  if (config.beta_true.size() && config.beta_true.size() != config.d + 1)
    throw std::invalid_argument("gen_dataset: beta_true length != d+1");
  const std::uint64_t noise_seed = config.noise_seed.value_or(config.seed);

  CounterRng rng_x = make_stream(config.seed, RngStream::kCovariates);
  CounterRng rng_w = make_stream(config.seed, RngStream::kTreatment);
  CounterRng rng_y = make_stream(noise_seed, RngStream::kResponse);
  CounterRng rng_c = make_stream(noise_seed, RngStream::kCensoring);

  const bool cox = config.family.is_cox();
  SimData out;
  out.data.family = config.emit_partial ? Family::cox_partial() : config.family;
  out.data.n_arms = 2;
  out.data.X.resize(config.n, config.d);
  out.data.w.resize(config.n);
  out.data.y.resize(config.n);
  if (cox) out.data.delta = Eigen::VectorXd(config.n);
  out.truth.true_eta0.resize(config.n);
  out.truth.true_eta1.resize(config.n);
  out.truth.true_e.resize(config.n);
  out.truth.true_tau.resize(config.n);
  out.truth.beta = config.beta_true.size() ? config.beta_true
                                           : Eigen::VectorXd::Zero(config.d + 1);

  for (Eigen::Index i = 0; i < config.n; ++i) {
    for (int j = 0; j < config.d; ++j) out.data.X(i, j) = rng_x.uniform(-1.0, 1.0);
    const Eigen::VectorXd x = out.data.X.row(i);
    const double e = config.propensity_at(x);
    const int w = rng_w.bernoulli(e) ? 1 : 0;
    const double tau = config.tau_at(x);
    double eta0 = config.eta0_at(x);
    out.truth.true_eta0[i] = eta0;
    out.truth.true_eta1[i] = eta0 + tau;
    out.truth.true_e[i] = e;
    out.truth.true_tau[i] = tau;
    if (config.latent_z) {
      if (rng_y.bernoulli(config.latent_z->prob)) eta0 += config.latent_z->effect;
    }
    const double eta = eta0 + w * tau;
    out.data.w[i] = w;
    if (!cox) {
      out.data.y[i] = config.family.sample(eta, rng_y);
    } else {
      const double t = config.family.sample(eta, rng_y);
      const double c = sample_censoring(config.censoring, rng_c);
      out.data.y[i] = std::min(t, c);
      (*out.data.delta)[i] = c >= t ? 1.0 : 0.0;
    }
  }
  out.data.validate();
  return out;
}

SimData gen_confounded_toy(Eigen::Index n, std::uint64_t seed) {
  CounterRng rng_x = make_stream(seed, RngStream::kCovariates);
  CounterRng rng_w = make_stream(seed, RngStream::kTreatment);
  CounterRng rng_y = make_stream(seed, RngStream::kResponse);

  SimData out;
  out.data.family = Family::gaussian();
  out.data.n_arms = 2;
  out.data.X.resize(n, 1);
  out.data.w.resize(n);
  out.data.y.resize(n);
  out.truth.true_eta0.resize(n);
  out.truth.true_eta1.resize(n);
  out.truth.true_e.resize(n);
  out.truth.true_tau = Eigen::VectorXd::Zero(n);
  out.truth.beta = Eigen::VectorXd::Zero(2);

  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = rng_x.uniform(-2.0, 2.0);
    const double e = sigmoid(x);
    const int w = rng_w.bernoulli(e) ? 1 : 0;
    const double eta = x * x;
    out.data.X(i, 0) = x;
    out.data.w[i] = w;
    out.data.y[i] = eta + rng_y.normal();
    out.truth.true_eta0[i] = eta;
    out.truth.true_eta1[i] = eta;
    out.truth.true_e[i] = e;
  }
  return out;
}

SimData gen_noncollapsible(Eigen::Index n, const Family& family,
                           const Eigen::VectorXd& tau_coefs, std::uint64_t seed) {
  if (!family.is_exponential())
    throw std::invalid_argument("gen_noncollapsible: exponential family required");
  SimConfig config;
  config.n = n;
  config.d = 5;
  config.alpha = Eigen::VectorXd::Zero(5);
  config.alpha << 0.4, 0.4, 0.2, 0.2, 0.2;
  config.delta = 0.8;
  config.beta_true = tau_coefs;
  config.propensity_coefs = Eigen::VectorXd::Zero(6);  // randomized, e = 0.5
  config.family = family;
  config.latent_z = LatentZ{0.5, 1.0};
  config.seed = seed;
  return gen_dataset(config);
}

Dataset subsample_observational(const Dataset& data,
                                const Eigen::VectorXd& artificial_propensity_coefs,
                                std::uint64_t seed) {
  if (artificial_propensity_coefs.size() != data.d() + 1)
    throw std::invalid_argument("subsample_observational: coefficient length != d+1");
  CounterRng rng = make_stream(seed, RngStream::kSubsample);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    const Eigen::VectorXd x = data.X.row(i);
    const double e = sigmoid(artificial_propensity_coefs[0] +
                             artificial_propensity_coefs.tail(data.d()).dot(x));
    const double ratio = data.w[i] == 1 ? e / (1.0 - e) : (1.0 - e) / e;
    if (rng.uniform() < std::min(ratio, 1.0)) keep.push_back(i);
  }
  if (keep.empty()) throw std::runtime_error("subsample_observational: empty subsample");
  return data.subset(keep);
}

namespace {

double censored_fraction(const SimConfig& config, const CensoringMechanism& mech,
                         std::uint64_t seed) {
  SimConfig probe = config;
  probe.censoring = mech;
  probe.n = 100000;
  probe.seed = seed;
  probe.emit_partial = false;
  const SimData sim = gen_dataset(probe);
  return 1.0 - sim.data.delta->mean();
}

CensoringMechanism with_scale(const CensoringMechanism& mech, double scale) {
  return std::visit(
      [&](const auto& m) -> CensoringMechanism {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, SinglyCensored>) {
          return SinglyCensored{scale};
        } else if constexpr (std::is_same_v<T, UniformOn>) {
          return UniformOn{scale};
        } else if constexpr (std::is_same_v<T, WeibullCensoring>) {
          return WeibullCensoring{scale, m.shape};
        } else {
          return m;
        }
      },
      mech);
}

// censored fraction as a function of the scale knob: decreasing in T for
// the time-horizon mechanisms, increasing in the Weibull rate
bool fraction_increases_with_scale(const CensoringMechanism& mech) {
  return std::holds_alternative<WeibullCensoring>(mech);
}

}  // namespace

CensoringMechanism calibrate_censoring(const SimConfig& config, double target_fraction) {
  if (!config.family.is_cox())
    throw std::invalid_argument("calibrate_censoring: Cox config required");
  if (std::holds_alternative<NoCensoring>(config.censoring)) {
    if (target_fraction > 0.005)
      throw std::runtime_error("calibrate_censoring: NoCensoring cannot reach target");
    return config.censoring;
  }
  const std::uint64_t seed = config.seed ^ 0xC5C5C5C5ULL;
  const bool increasing = fraction_increases_with_scale(config.censoring);
  double lo = 1e-6, hi = 1e6;
  auto frac_at = [&](double s) {
    const double f = censored_fraction(config, with_scale(config.censoring, s), seed);
    return increasing ? f : 1.0 - f;  // monotone increasing in s after flip
  };
  const double target = increasing ? target_fraction : 1.0 - target_fraction;
  if (frac_at(lo) > target || frac_at(hi) < target)
    throw std::runtime_error("calibrate_censoring: target unreachable within bracket");
  for (int iter = 0; iter < 60; ++iter) {
    const double mid = std::sqrt(lo * hi);  // log-scale bisection
    const double f = frac_at(mid);
    if (std::abs((increasing ? f : 1.0 - f) - target_fraction) <= 0.005)
      return with_scale(config.censoring, mid);
    (f < target ? lo : hi) = mid;
  }
  throw std::runtime_error("calibrate_censoring: bisection failed");
}

void write_truth_csv(const GroundTruth& truth, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out.precision(17);
  out << "true_eta0,true_eta1,true_e,true_tau\n";
  for (Eigen::Index i = 0; i < truth.true_eta0.size(); ++i)
    out << truth.true_eta0[i] << ',' << truth.true_eta1[i] << ',' << truth.true_e[i] << ','
        << truth.true_tau[i] << '\n';
}

}  // namespace dina
