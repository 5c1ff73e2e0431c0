#include "dina/evaluation.hpp"

#include <cmath>

namespace dina {

double tau_mse(const DinaFit& fit, const std::function<double(const Eigen::VectorXd&)>& tau_true,
               const Eigen::MatrixXd& eval_points) {
  if (eval_points.cols() != fit.d)
    throw std::invalid_argument("tau_mse: evaluation points have wrong dimension");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < eval_points.rows(); ++i) {
    const Eigen::VectorXd x = eval_points.row(i);
    const double err = tau_at(fit, x) - tau_true(x);
    acc += err * err;
  }
  return acc / static_cast<double>(eval_points.rows());
}

double tau_mse(const DinaFit& fit, const SimConfig& config, Eigen::Index n_points,
               std::uint64_t seed) {
  CounterRng rng = make_stream(seed, RngStream::kEvaluation);
  Eigen::MatrixXd pts(n_points, config.d);
  for (Eigen::Index i = 0; i < n_points; ++i)
    for (int j = 0; j < config.d; ++j) pts(i, j) = rng.uniform(-1.0, 1.0);
  return tau_mse(
      fit, [&config](const Eigen::VectorXd& x) { return config.tau_at(x); }, pts);
}

double snr(const SimConfig& config, Eigen::Index n_draws, std::uint64_t seed) {
  if (!config.family.is_exponential())
    throw std::invalid_argument("snr: exponential family config required");
  CounterRng rng = make_stream(seed, RngStream::kEvaluation);
  double mean_mu = 0.0, mean_mu2 = 0.0, mean_var = 0.0;
  Eigen::VectorXd x(config.d);
  for (Eigen::Index i = 0; i < n_draws; ++i) {
    for (int j = 0; j < config.d; ++j) x[j] = rng.uniform(-1.0, 1.0);
    const int w = rng.bernoulli(config.propensity_at(x)) ? 1 : 0;
    double eta = config.eta0_at(x) + w * config.tau_at(x);
    if (config.latent_z && rng.bernoulli(config.latent_z->prob))
      eta += config.latent_z->effect;
    const double mu = config.family.mu(eta);
    mean_mu += mu;
    mean_mu2 += mu * mu;
    mean_var += config.family.variance(eta);
  }
  const double n = static_cast<double>(n_draws);
  mean_mu /= n;
  mean_mu2 /= n;
  mean_var /= n;
  return (mean_mu2 - mean_mu * mean_mu) / mean_var;
}

BootstrapResult bootstrap_ci(const Dataset& data, const Estimator& estimator,
                             const Eigen::VectorXd& original_beta, int B, double level,
                             std::uint64_t seed) {
  if (B < 2) throw std::invalid_argument("bootstrap_ci: B >= 2 required");
  if (level <= 0.0 || level >= 1.0)
    throw std::invalid_argument("bootstrap_ci: level in (0,1) required");
  CounterRng rng = make_stream(seed, RngStream::kBootstrap);
  const Eigen::Index n = data.n();
  const Eigen::Index p = original_beta.size();

  Eigen::MatrixXd draws(B, p);
  int done = 0, attempts = 0;
  std::vector<Eigen::Index> idx(n);
  while (done < B) {
    if (++attempts > 5 * B)
      throw std::runtime_error("bootstrap_ci: too many failed resamples");
    for (Eigen::Index i = 0; i < n; ++i)
      idx[i] = static_cast<Eigen::Index>(rng.uniform() * static_cast<double>(n));
    try {
      const Eigen::VectorXd beta = estimator(data.subset(idx));
      if (beta.size() != p)
        throw std::runtime_error("bootstrap_ci: estimator returned wrong length");
      draws.row(done++) = beta;
    } catch (const SolverError&) {
      // redraw
    }
  }

  BootstrapResult out;
  out.B = B;
  const Eigen::RowVectorXd mean = draws.colwise().mean();
  out.se = ((draws.rowwise() - mean).colwise().squaredNorm() / static_cast<double>(B - 1))
               .cwiseSqrt()
               .transpose();
  // two-sided normal quantile via inverse-erf-free approximation is not
  // needed: only 0.95 and friends occur, but keep it general
  const double alpha = 1.0 - level;
  auto norm_quantile = [](double p_) {
    // Acklam's rational approximation, |relative error| < 1.15e-9
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425, phigh = 1 - plow;
    double q, r;
    if (p_ < plow) {
      q = std::sqrt(-2 * std::log(p_));
      return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
             ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    }
    if (p_ <= phigh) {
      q = p_ - 0.5;
      r = q * q;
      return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
             (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
    }
    q = std::sqrt(-2 * std::log(1 - p_));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  };
  const double z = norm_quantile(1.0 - alpha / 2.0);
  out.ci_lo = original_beta - z * out.se;
  out.ci_hi = original_beta + z * out.se;
  return out;
}

double sensitivity_r2(const Eigen::VectorXd& tau_oracle, const Eigen::VectorXd& tau_hat) {
  if (tau_oracle.size() != tau_hat.size())
    throw std::invalid_argument("sensitivity_r2: length mismatch");
  const double denom = tau_oracle.squaredNorm();
  if (denom == 0.0) throw std::invalid_argument("sensitivity_r2: all-zero oracle vector");
  return 1.0 - (tau_hat - tau_oracle).squaredNorm() / denom;
}

double rate_regression(const std::vector<std::pair<double, double>>& mse_by_n) {
  if (mse_by_n.size() < 3)
    throw std::invalid_argument("rate_regression: need at least 3 sample sizes");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [n, mse] : mse_by_n) {
    if (n <= 0.0 || mse <= 0.0)
      throw std::invalid_argument("rate_regression: nonpositive n or MSE");
    const double x = std::log(n), y = std::log(mse);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double m = static_cast<double>(mse_by_n.size());
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

}  // namespace dina
