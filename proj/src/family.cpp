#include "dina/family.hpp"

#include <cmath>

namespace dina {

double BaselineHazard::invert(double target) const {
  if (target <= 0.0) return 0.0;
  if (inverse) return inverse(target);
  // bracket by doubling, then bisection
  double hi = 1.0;
  int guard = 0;
  while (cum_hazard(hi) < target) {
    hi *= 2.0;
    if (++guard > 1200) throw std::runtime_error("BaselineHazard::invert: target unreachable");
  }
  double lo = 0.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (cum_hazard(mid) < target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

BaselineHazard BaselineHazard::power(double p, double scale) {
  if (p <= 0.0 || scale <= 0.0) throw std::invalid_argument("power hazard: p, scale > 0 required");
  BaselineHazard b;
  b.cum_hazard = [p, scale](double y) { return scale * std::pow(y, p); };
  b.hazard = [p, scale](double y) { return scale * p * std::pow(y, p - 1.0); };
  b.inverse = [p, scale](double v) { return std::pow(v / scale, 1.0 / p); };
  return b;
}

Family Family::gaussian(double dispersion) {
  if (dispersion <= 0.0) throw std::invalid_argument("gaussian: dispersion > 0 required");
  return Family(FamilyKind::Gaussian, dispersion);
}
Family Family::bernoulli() { return Family(FamilyKind::Bernoulli, 1.0); }
Family Family::poisson() { return Family(FamilyKind::Poisson, 1.0); }
Family Family::cox_full(BaselineHazard baseline) {
  if (!baseline.cum_hazard) throw std::invalid_argument("cox_full: baseline cum_hazard required");
  Family f(FamilyKind::CoxFull, 1.0);
  f.baseline_ = std::make_shared<BaselineHazard>(std::move(baseline));
  return f;
}
Family Family::cox_partial() { return Family(FamilyKind::CoxPartial, 1.0); }

const BaselineHazard& Family::baseline() const {
  if (!baseline_) throw std::logic_error("family has no baseline hazard");
  return *baseline_;
}

double Family::psi(double eta) const {
  switch (kind_) {
    case FamilyKind::Gaussian:
      return dispersion_ * eta * eta / 2.0;
    case FamilyKind::Bernoulli:
      return log1pexp(eta);
    case FamilyKind::Poisson:
      return std::exp(eta);
    default:
      throw std::invalid_argument("psi: Cox families have no scalar cumulant");
  }
}

double Family::mu(double eta) const {
  switch (kind_) {
    case FamilyKind::Gaussian:
      return dispersion_ * eta;
    case FamilyKind::Bernoulli:
      return sigmoid(eta);
    case FamilyKind::Poisson:
      return std::exp(eta);
    default:
      throw std::invalid_argument("mu: not an exponential family");
  }
}

double Family::variance(double eta) const {
  switch (kind_) {
    case FamilyKind::Gaussian:
      return dispersion_;
    case FamilyKind::Bernoulli: {
      const double m = sigmoid(eta);
      return m * (1.0 - m);
    }
    case FamilyKind::Poisson:
      return std::exp(eta);
    default:
      throw std::invalid_argument("variance: not an exponential family");
  }
}

double Family::log_lik(double y, double eta) const {
  switch (kind_) {
    case FamilyKind::Bernoulli:
      if (y != 0.0 && y != 1.0) throw std::invalid_argument("log_lik: Bernoulli y must be 0/1");
      break;
    case FamilyKind::Poisson:
      if (y < 0.0 || y != std::floor(y))
        throw std::invalid_argument("log_lik: Poisson y must be a nonnegative integer");
      break;
    case FamilyKind::Gaussian:
      break;
    default:
      throw std::invalid_argument("log_lik: Cox families use the cox module likelihoods");
  }
  return y * eta - psi(eta);
}

double Family::sample(double eta, CounterRng& rng) const {
  switch (kind_) {
    case FamilyKind::Gaussian:
      return dispersion_ * eta + std::sqrt(dispersion_) * rng.normal();
    case FamilyKind::Bernoulli:
      return rng.bernoulli(sigmoid(eta)) ? 1.0 : 0.0;
    case FamilyKind::Poisson:
      return static_cast<double>(rng.poisson(std::exp(eta)));
    case FamilyKind::CoxFull: {
      // Lambda(T) ~ Exp(e^eta), inverted through the baseline
      const double e = rng.exponential() * std::exp(-eta);
      return baseline_->invert(e);
    }
    default:
      throw std::invalid_argument("sample: CoxPartial has no generative baseline");
  }
}

}  // namespace dina
