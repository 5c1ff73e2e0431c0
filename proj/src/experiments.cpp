#include "dina/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace dina {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> parse_doubles(const std::string& s, const std::string& key) {
  std::vector<double> out;
  for (const std::string& tok : split_list(s)) {
    try {
      std::size_t pos = 0;
      out.push_back(std::stod(tok, &pos));
      if (pos != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw std::runtime_error("config: bad number '" + tok + "' in " + key);
    }
  }
  return out;
}

std::ofstream open_csv(const RunConfig& config, const std::string& name,
                       const std::string& header) {
  std::filesystem::create_directories(config.out_dir);
  const std::string path = config.out_dir + "/" + name;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out.precision(17);
  out << header << '\n';
  return out;
}

void write_manifest(const RunConfig& config) {
  std::ofstream out(config.out_dir + "/manifest.txt");
  out << "version=0.1.0\n";
  out << "experiment=" << config.experiment << '\n';
  out << "seed=" << config.seed << '\n';
  out << "replications=" << config.replications << '\n';
  out << "family=" << config.family << '\n';
  out << "bootstrap=" << config.bootstrap_B << '\n';
  out << "n_grid=";
  for (std::size_t i = 0; i < config.n_grid.size(); ++i)
    out << (i ? "," : "") << config.n_grid[i];
  out << '\n';
  out << "methods=";
  for (std::size_t i = 0; i < config.methods.size(); ++i)
    out << (i ? "," : "") << config.methods[i];
  out << '\n';
}

void apply_overrides(SimConfig& sim, const RunConfig& config) {
  if (!config.alpha.empty())
    sim.alpha = Eigen::Map<const Eigen::VectorXd>(config.alpha.data(), config.alpha.size());
  if (!config.beta.empty())
    sim.beta_true = Eigen::Map<const Eigen::VectorXd>(config.beta.data(), config.beta.size());
  if (!config.propensity.empty())
    sim.propensity_coefs =
        Eigen::Map<const Eigen::VectorXd>(config.propensity.data(), config.propensity.size());
  if (!std::isnan(config.delta)) sim.delta = config.delta;
  sim.d = static_cast<int>(sim.alpha.size());
}

std::vector<std::string> methods_or(const RunConfig& config,
                                    std::vector<std::string> fallback) {
  return config.methods.empty() ? std::move(fallback) : config.methods;
}

}  // namespace

RunConfig parse_run_config_text(const std::string& text, const std::string& origin) {
  RunConfig config;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "experiment") {
      config.experiment = value;
    } else if (key == "n") {
      config.n_grid = {static_cast<Eigen::Index>(std::stoll(value))};
    } else if (key == "n_grid") {
      config.n_grid.clear();
      for (double v : parse_doubles(value, key))
        config.n_grid.push_back(static_cast<Eigen::Index>(v));
    } else if (key == "replications" || key == "reps") {
      config.replications = std::stoi(value);
    } else if (key == "seed") {
      config.seed = std::stoull(value);
    } else if (key == "methods") {
      config.methods = split_list(value);
    } else if (key == "family") {
      config.family = value;
    } else if (key == "bootstrap") {
      config.bootstrap_B = std::stoi(value);
    } else if (key == "threads") {
      config.threads = std::stoi(value);
    } else if (key == "out") {
      config.out_dir = value;
    } else if (key == "alpha") {
      config.alpha = parse_doubles(value, key);
    } else if (key == "beta") {
      config.beta = parse_doubles(value, key);
    } else if (key == "propensity") {
      config.propensity = parse_doubles(value, key);
    } else if (key == "delta") {
      config.delta = std::stod(value);
    } else if (key == "censoring") {
      config.censoring = value;
    } else if (key == "censoring_scale") {
      config.censoring_scale = std::stod(value);
    } else if (key == "censoring_shape") {
      config.censoring_shape = std::stod(value);
    } else if (key == "censoring_target") {
      config.censoring_target = std::stod(value);
    } else {
      throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": unknown key '" +
                               key + "'");
    }
  }
  if (config.experiment.empty()) throw std::runtime_error(origin + ": missing experiment id");
  if (config.replications < 1) throw std::runtime_error(origin + ": replications >= 1 required");
  return config;
}

RunConfig parse_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_run_config_text(buf.str(), path);
}

CensoringMechanism censoring_from_config(const RunConfig& config) {
  if (config.censoring == "none") return NoCensoring{};
  if (config.censoring == "singly") return SinglyCensored{config.censoring_scale};
  if (config.censoring == "uniform") return UniformOn{config.censoring_scale};
  if (config.censoring == "weibull")
    return WeibullCensoring{config.censoring_scale, config.censoring_shape};
  throw std::runtime_error("unknown censoring '" + config.censoring + "'");
}

Family family_by_name(const std::string& name) {
  if (name == "gaussian") return Family::gaussian();
  if (name == "poisson") return Family::poisson();
  if (name == "bernoulli") return Family::bernoulli();
  if (name == "cox" || name == "cox-full") return Family::cox_full(BaselineHazard::power(1.0));
  if (name == "cox-partial") return Family::cox_partial();
  throw std::runtime_error("unknown family '" + name + "'");
}

SimConfig default_design(FamilyKind family, Eigen::Index n, std::uint64_t seed,
                         bool confounded, bool heterogeneous) {
  SimConfig config;
  config.n = n;
  config.d = 5;
  config.seed = seed;
  config.alpha = Eigen::VectorXd(5);
  config.beta_true = Eigen::VectorXd(6);
  config.propensity_coefs = Eigen::VectorXd::Zero(6);
  switch (family) {
    case FamilyKind::Gaussian:
      config.family = Family::gaussian();
      config.alpha << 0.5, 0.5, 0.25, 0.25, 0.25;
      config.delta = 0.5;
      config.beta_true << 0.3, 0.3, 0.3, 0.2, 0.2, 0.2;
      break;
    case FamilyKind::Poisson:
      config.family = Family::poisson();
      config.alpha << 0.35, 0.35, 0.2, 0.2, 0.2;
      config.delta = 0.35;
      config.beta_true << 0.2, 0.2, 0.2, 0.15, 0.15, 0.15;
      break;
    case FamilyKind::Bernoulli:
      config.family = Family::bernoulli();
      config.alpha << 1.0, 1.0, 0.7, 0.7, 0.7;
      config.delta = 0.8;
      config.beta_true << 0.5, 0.5, 0.5, 0.3, 0.3, 0.3;
      break;
    case FamilyKind::CoxFull:
    case FamilyKind::CoxPartial:
      config.family = Family::cox_full(BaselineHazard::power(1.0));
      config.alpha << 0.5, 0.5, 0.25, 0.25, 0.25;
      config.delta = 0.5;
      config.beta_true << 0.3, 0.3, 0.3, 0.2, 0.2, 0.2;
      config.emit_partial = family == FamilyKind::CoxPartial;
      break;
  }
  if (!heterogeneous) config.beta_true.tail(5).setZero();
  if (confounded) config.propensity_coefs << 0.0, 0.6, 0.6, 0.4, 0.4, 0.4;
  return config;
}

DinaFit fit_method(const std::string& method, const Dataset& data, const DinaOptions& options) {
  if (method == "dina") return fit_dina(data, options);
  if (method == "e") return fit_e(data, options);
  if (method == "se") return fit_se(data, options.outcome);
  if (method == "x") return fit_x(data, options.outcome);
  if (method == "pax") return fit_pax(data, options.propensity, options.outcome);
  throw std::runtime_error("unknown method '" + method + "'");
}

double replicate_mse(const std::string& method, const SimConfig& config, std::uint64_t rep_seed,
                     const DinaOptions& options, Eigen::Index eval_points) {
  SimConfig rep_config = config;
  rep_config.seed = rep_seed;
  const SimData sim = gen_dataset(rep_config);
  DinaOptions opts = options;
  opts.seed = rep_seed;
  const DinaFit fit = fit_method(method, sim.data, opts);
  return tau_mse(fit, rep_config, eval_points, rep_seed);
}

namespace {

// ---- individual experiments -------------------------------------------

void run_toy_confounding(const RunConfig& config) {
  auto mse_out = open_csv(config, "mse_results.csv", "method,n,replication,mse");
  const Eigen::Index n = config.n_grid.front();
  for (const std::string& method : methods_or(config, {"dina", "se"})) {
    for (int rep = 0; rep < config.replications; ++rep) {
      const std::uint64_t rep_seed = config.seed + 1000 * (rep + 1);
      const SimData sim = gen_confounded_toy(n, rep_seed);
      DinaOptions opts;
      opts.seed = rep_seed;
      const DinaFit fit = fit_method(method, sim.data, opts);
      // true tau is identically zero on the toy; evaluate over its x range
      CounterRng rng = make_stream(rep_seed, RngStream::kEvaluation);
      double acc = 0.0;
      const int m = 20000;
      for (int i = 0; i < m; ++i) {
        Eigen::VectorXd x(1);
        x[0] = rng.uniform(-2.0, 2.0);
        const double t = tau_at(fit, x);
        acc += t * t;
      }
      mse_out << method << ',' << n << ',' << rep << ',' << acc / m << '\n';
    }
  }
}

void run_fig2(const RunConfig& config) {
  auto out = open_csv(config, "bias_results.csv",
                      "family,scenario,method,n,replication,beta1_error");
  const Eigen::Index n = config.n_grid.front();
  for (const std::string& fam : {"gaussian", "poisson", "bernoulli"}) {
    for (const std::string& scenario : {"constant", "heterogeneous"}) {
      Eigen::VectorXd beta(6);
      if (scenario == "constant")
        beta << 0.4, 0, 0, 0, 0, 0;
      else
        beta << 0.4, 0.4, 0.4, 0.2, 0.2, 0.2;
      for (const std::string& method : methods_or(config, {"se", "dina"})) {
        for (int rep = 0; rep < config.replications; ++rep) {
          const std::uint64_t rep_seed = config.seed + 1000 * (rep + 1);
          const SimData sim = gen_noncollapsible(n, family_by_name(fam), beta, rep_seed);
          DinaOptions opts;
          opts.seed = rep_seed;
          const DinaFit fit = fit_method(method, sim.data, opts);
          out << fam << ',' << scenario << ',' << method << ',' << n << ',' << rep << ','
              << fit.beta[1] - beta[1] << '\n';
        }
      }
    }
  }
}

void run_fig3(const RunConfig& config) {
  auto out = open_csv(config, "mse_results.csv", "method,n,replication,mse");
  const Eigen::Index n = config.n_grid.front();
  for (const std::string& scenario : {"confounding", "noncollapsible", "both"}) {
    SimConfig sim = default_design(FamilyKind::Poisson, n, config.seed,
                                   /*confounded=*/scenario != "noncollapsible");
    apply_overrides(sim, config);
    if (scenario != "confounding") sim.latent_z = LatentZ{0.5, 1.0};
    for (const std::string& method : methods_or(config, {"dina", "e", "se"})) {
      for (int rep = 0; rep < config.replications; ++rep)
        out << method << '-' << scenario[0] << ',' << n << ',' << rep << ','
            << replicate_mse(method, sim, config.seed + 1000 * (rep + 1)) << '\n';
    }
  }
}

void run_fig4(const RunConfig& config) {
  auto out = open_csv(config, "mse_results.csv", "method,n,replication,mse");
  const Eigen::Index n = config.n_grid.front();
  for (double target : {0.05, 0.5, 0.95}) {
    SimConfig sim = default_design(FamilyKind::CoxFull, n, config.seed);
    apply_overrides(sim, config);
    sim.censoring = UniformOn{1.0};
    sim.censoring = calibrate_censoring(sim, target);
    for (const std::string& method : methods_or(config, {"dina", "e", "se"})) {
      for (int rep = 0; rep < config.replications; ++rep) {
        DinaOptions opts;
        opts.known_censoring = sim.censoring;
        opts.heavy_censoring_shortcut = target > 0.9;
        out << method << '@' << target << ',' << n << ',' << rep << ','
            << replicate_mse(method, sim, config.seed + 1000 * (rep + 1), opts) << '\n';
      }
    }
  }
}

void run_fig5(const RunConfig& config) {
  auto out = open_csv(config, "mse_results.csv", "method,n,replication,mse");
  const Eigen::Index n = config.n_grid.front();
  for (double p : {1.0, 2.0, 5.0}) {
    SimConfig sim = default_design(FamilyKind::CoxFull, n, config.seed);
    sim.family = Family::cox_full(BaselineHazard::power(p));
    sim.censoring = UniformOn{1.0};
    sim.censoring = calibrate_censoring(sim, 0.5);
    SimConfig sim_partial = sim;
    sim_partial.emit_partial = true;
    for (int rep = 0; rep < config.replications; ++rep) {
      const std::uint64_t rep_seed = config.seed + 1000 * (rep + 1);
      DinaOptions opts;
      opts.known_censoring = sim.censoring;
      out << "dina-full@" << p << ',' << n << ',' << rep << ','
          << replicate_mse("dina", sim, rep_seed, opts) << '\n';
      out << "dina-partial@" << p << ',' << n << ',' << rep << ','
          << replicate_mse("dina", sim_partial, rep_seed, opts) << '\n';
      out << "se@" << p << ',' << n << ',' << rep << ','
          << replicate_mse("se", sim, rep_seed, opts) << '\n';
    }
  }
}

void run_fig6(const RunConfig& config, bool with_rate) {
  auto out = open_csv(config, "mse_results.csv", "family,method,n,replication,mse");
  std::ofstream rate_out;
  if (with_rate) rate_out = open_csv(config, "rate.csv", "family,method,slope");
  const std::vector<std::string> families = {"gaussian", "poisson", "bernoulli", "cox-partial"};
  for (const std::string& fam : families) {
    const FamilyKind kind = fam == "gaussian"     ? FamilyKind::Gaussian
                            : fam == "poisson"    ? FamilyKind::Poisson
                            : fam == "bernoulli"  ? FamilyKind::Bernoulli
                                                  : FamilyKind::CoxPartial;
    SimConfig base = default_design(kind, 1024, config.seed);
    apply_overrides(base, config);
    if (kind == FamilyKind::CoxPartial) {
      base.censoring = UniformOn{1.0};
      base.censoring = calibrate_censoring(base, 0.75);
    }
    for (const std::string& method : methods_or(config, {"dina", "e", "se", "x", "pax"})) {
      std::vector<std::pair<double, double>> mse_by_n;
      for (Eigen::Index n : config.n_grid) {
        SimConfig sim = base;
        sim.n = n;
        double mean_mse = 0.0;
        for (int rep = 0; rep < config.replications; ++rep) {
          const double mse = replicate_mse(method, sim, config.seed + 1000 * (rep + 1));
          out << fam << ',' << method << ',' << n << ',' << rep << ',' << mse << '\n';
          mean_mse += mse;
        }
        mse_by_n.emplace_back(static_cast<double>(n), mean_mse / config.replications);
      }
      if (with_rate && config.n_grid.size() >= 3)
        rate_out << fam << ',' << method << ',' << rate_regression(mse_by_n) << '\n';
    }
  }
}

void run_table3(const RunConfig& config) {
  auto out = open_csv(config, "coverage.csv", "method,sample_size,coefficient,coverage,width");
  for (Eigen::Index n : config.n_grid) {
    SimConfig sim = default_design(FamilyKind::Poisson, n, config.seed);
    apply_overrides(sim, config);
    const Eigen::VectorXd truth = sim.beta_true;
    for (const std::string& method : methods_or(config, {"dina", "se"})) {
      Eigen::VectorXd covered = Eigen::VectorXd::Zero(6);
      Eigen::VectorXd widths = Eigen::VectorXd::Zero(6);
      for (int rep = 0; rep < config.replications; ++rep) {
        const std::uint64_t rep_seed = config.seed + 1000 * (rep + 1);
        SimConfig rc = sim;
        rc.seed = rep_seed;
        const SimData data = gen_dataset(rc);
        DinaOptions opts;
        opts.seed = rep_seed;
        const DinaFit fit = fit_method(method, data.data, opts);
        const Estimator est = [&](const Dataset& d) {
          return fit_method(method, d, opts).beta;
        };
        const BootstrapResult boot =
            bootstrap_ci(data.data, est, fit.beta, config.bootstrap_B, 0.95, rep_seed);
        for (int j = 0; j < 6; ++j) {
          if (boot.ci_lo[j] <= truth[j] && truth[j] <= boot.ci_hi[j]) covered[j] += 1.0;
          widths[j] += boot.ci_hi[j] - boot.ci_lo[j];
        }
      }
      // coefficient index 0 is the intercept
      for (int j = 0; j < 6; ++j)
        out << method << ',' << n << ',' << j << ',' << covered[j] / config.replications
            << ',' << widths[j] / config.replications << '\n';
    }
  }
}

// empirical second-stage score at the true (a, nu, beta) with perturbed
// nuisances; reports centered finite-difference directional derivatives
void run_orthogonality(const RunConfig& config) {
  auto out = open_csv(config, "orthogonality.csv",
                      "family,direction,derivative_max,score_se_max,ratio");
  const Eigen::Index n = std::max<Eigen::Index>(config.n_grid.front(), 10000);
  for (const std::string& fam : {"poisson", "cox-full"}) {
    const bool cox = fam == "cox-full";
    SimConfig sim = default_design(cox ? FamilyKind::CoxFull : FamilyKind::Poisson, n,
                                   config.seed);
    const SimData data = gen_dataset(sim);
    const Dataset& ds = data.data;
    const BaselineHazard* bh = cox ? &sim.family.baseline() : nullptr;

    // true blend
    std::vector<double> a_true(ds.n()), nu_true(ds.n()), tau_true(ds.n());
    for (Eigen::Index i = 0; i < ds.n(); ++i) {
      const Eigen::VectorXd x = ds.X.row(i);
      const double e = data.truth.true_e[i];
      const double eta0 = data.truth.true_eta0[i], eta1 = data.truth.true_eta1[i];
      double a;
      if (cox) {
        a = e;  // no censoring in this diagnostic: p1 = p0 = 1
      } else {
        const double v0 = sim.family.variance(eta0), v1 = sim.family.variance(eta1);
        a = e * v1 / (e * v1 + (1 - e) * v0);
      }
      a_true[i] = a;
      nu_true[i] = a * eta1 + (1 - a) * eta0;
      tau_true[i] = data.truth.true_tau[i];
    }

    // per-row score contributions with nuisances (a + s*xi, nu + s*zeta)
    auto score = [&](double s, int dir, Eigen::VectorXd& mean, Eigen::VectorXd& se) {
      Eigen::MatrixXd rows(ds.n(), 6);
      for (Eigen::Index i = 0; i < ds.n(); ++i) {
        const Eigen::VectorXd x = ds.X.row(i);
        const double xi = std::sin(3.0 * x[0] + dir);
        const double zeta = std::cos(2.0 * x[1] + 0.5 * dir);
        const double a = std::clamp(a_true[i] + s * xi, 0.001, 0.999);
        const double nu = nu_true[i] + s * zeta;
        const double resid_scale = ds.w[i] - a;
        const double eta = nu + resid_scale * tau_true[i];
        double resid;
        if (cox) {
          resid = (*ds.delta)[i] - bh->cum_hazard(ds.y[i]) * std::exp(eta);
        } else {
          resid = ds.y[i] - sim.family.mu(eta);
        }
        rows(i, 0) = resid * resid_scale;
        rows.row(i).tail(5) = rows(i, 0) * x.transpose();
      }
      mean = rows.colwise().mean();
      se = ((rows.rowwise() - mean.transpose()).colwise().squaredNorm() /
            (static_cast<double>(ds.n()) * (ds.n() - 1.0)))
               .cwiseSqrt()
               .transpose();
    };

    const double h = 1e-3;
    for (int dir = 0; dir < 5; ++dir) {
      Eigen::VectorXd up, dn, se0, tmp;
      score(h, dir, up, tmp);
      score(-h, dir, dn, tmp);
      score(0.0, dir, tmp, se0);
      const Eigen::VectorXd deriv = (up - dn) / (2.0 * h);
      const double dmax = deriv.cwiseAbs().maxCoeff();
      const double semax = se0.maxCoeff();
      out << fam << ',' << dir << ',' << dmax << ',' << semax << ',' << dmax / semax << '\n';
    }
  }
}

// displacement of beta-hat under injected nuisance errors of size c,
// relative to the unperturbed oracle fit on the same draws
void run_robustness_rate(const RunConfig& config) {
  auto out = open_csv(config, "robustness.csv", "method,c,displacement");
  auto slope_out = open_csv(config, "slopes.csv", "method,slope");
  const Eigen::Index n = config.n_grid.front();
  const std::vector<double> cs = {0.05, 0.1, 0.2, 0.4};
  SimConfig sim = default_design(FamilyKind::Poisson, n, config.seed);
  apply_overrides(sim, config);

  auto perturb_eta0 = [](const Eigen::VectorXd& x, double c) { return c * std::sin(3.0 * x[0]); };
  auto perturb_eta1 = [](const Eigen::VectorXd& x, double c) {
    return c * std::cos(2.0 * x[1] + 1.0);
  };
  auto perturb_e = [](const Eigen::VectorXd& x, double c) { return 0.5 * c * std::sin(x[2]); };

  for (const std::string& method : {"dina", "se"}) {
    std::vector<std::pair<double, double>> disp_by_c;
    for (double c : cs) {
      Eigen::VectorXd mean_disp = Eigen::VectorXd::Zero(6);
      for (int rep = 0; rep < config.replications; ++rep) {
        const std::uint64_t rep_seed = config.seed + 1000 * (rep + 1);
        SimConfig rc = sim;
        rc.seed = rep_seed;
        const SimData data = gen_dataset(rc);
        auto fit_with = [&](double cc) -> Eigen::VectorXd {
          if (method == "se") {
            // nuisance-injected analogue: least squares of the perturbed
            // natural-parameter difference on [1, x]
            Eigen::VectorXd diff(data.data.n());
            for (Eigen::Index i = 0; i < data.data.n(); ++i) {
              const Eigen::VectorXd x = data.data.X.row(i);
              diff[i] = (data.truth.true_eta1[i] + perturb_eta1(x, cc)) -
                        (data.truth.true_eta0[i] + perturb_eta0(x, cc));
            }
            GlmSpec spec;
            spec.family = Family::gaussian();
            spec.design = with_intercept(data.data.X);
            return fit_glm(spec, diff).coef;
          }
          DinaOptions opts;
          opts.seed = rep_seed;
          const GroundTruth& truth = data.truth;
          const SimConfig cfg = rc;
          opts.oracle_e = [cfg, perturb_e, cc](const Eigen::VectorXd& x) {
            return std::clamp(cfg.propensity_at(x) + perturb_e(x, cc), 0.01, 0.99);
          };
          opts.oracle_eta = std::vector<FittedFunction>{
              [cfg, perturb_eta0, cc](const Eigen::VectorXd& x) {
                return cfg.eta0_at(x) + perturb_eta0(x, cc);
              },
              [cfg, perturb_eta1, cc](const Eigen::VectorXd& x) {
                return cfg.eta0_at(x) + cfg.tau_at(x) + perturb_eta1(x, cc);
              }};
          return fit_dina(data.data, opts).beta;
        };
        mean_disp += fit_with(c) - fit_with(0.0);
      }
      mean_disp /= config.replications;
      const double disp = mean_disp.norm();
      out << method << ',' << c << ',' << disp << '\n';
      disp_by_c.emplace_back(c, std::max(disp, 1e-12));
    }
    slope_out << method << ',' << rate_regression(disp_by_c) << '\n';
  }
}

void run_sensitivity(const RunConfig& config) {
  auto out = open_csv(config, "r2.csv", "method,replication,r2");
  const Eigen::Index n = config.n_grid.front();
  SimConfig sim = default_design(FamilyKind::Poisson, n, config.seed, /*confounded=*/false);
  apply_overrides(sim, config);
  const SimData original = gen_dataset(sim);
  Eigen::VectorXd artificial(6);
  artificial << 0.0, 1.0, 1.0, 0.5, 0.5, 0.5;

  for (const std::string& method : methods_or(config, {"dina", "se"})) {
    DinaOptions opts;
    opts.seed = config.seed;
    const DinaFit full_fit = fit_method(method, original.data, opts);
    Eigen::VectorXd tau_oracle(original.data.n());
    for (Eigen::Index i = 0; i < original.data.n(); ++i)
      tau_oracle[i] = tau_at(full_fit, original.data.X.row(i));

    for (int rep = 0; rep < config.replications; ++rep) {
      const std::uint64_t rep_seed = config.seed + 1000 * (rep + 1);
      const Dataset sub = subsample_observational(original.data, artificial, rep_seed);
      DinaOptions sub_opts;
      sub_opts.seed = rep_seed;
      const DinaFit sub_fit = fit_method(method, sub, sub_opts);
      Eigen::VectorXd tau_hat(original.data.n());
      for (Eigen::Index i = 0; i < original.data.n(); ++i)
        tau_hat[i] = tau_at(sub_fit, original.data.X.row(i));
      out << method << ',' << rep << ',' << sensitivity_r2(tau_oracle, tau_hat) << '\n';
    }
  }
}

}  // namespace

void run_experiment(const RunConfig& config) {
  const std::string& id = config.experiment;
  if (id == "toy-confounding") {
    run_toy_confounding(config);
  } else if (id == "fig2") {
    run_fig2(config);
  } else if (id == "fig3") {
    run_fig3(config);
  } else if (id == "fig4") {
    run_fig4(config);
  } else if (id == "fig5") {
    run_fig5(config);
  } else if (id == "fig6") {
    run_fig6(config, /*with_rate=*/false);
  } else if (id == "rate") {
    run_fig6(config, /*with_rate=*/true);
  } else if (id == "table3") {
    run_table3(config);
  } else if (id == "orthogonality") {
    run_orthogonality(config);
  } else if (id == "robustness-rate") {
    run_robustness_rate(config);
  } else if (id == "sensitivity") {
    run_sensitivity(config);
  } else {
    throw std::runtime_error("unknown experiment '" + id + "'");
  }
  write_manifest(config);
}

}  // namespace dina
