#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>

#include "dina/rng.hpp"

namespace dina {

// Baseline cumulative hazard for the proportional-hazards families.
// cum_hazard must be nondecreasing with cum_hazard(0) == 0; hazard is its
// derivative. inverse is optional; sampling falls back to bisection.
struct BaselineHazard {
  std::function<double(double)> cum_hazard;
  std::function<double(double)> hazard;
  std::function<double(double)> inverse;  // may be empty

  double invert(double target) const;

  // Lambda(y) = y^p, the shapes used throughout the survival experiments
  static BaselineHazard power(double p, double scale = 1.0);
};

enum class FamilyKind { Gaussian, Bernoulli, Poisson, CoxFull, CoxPartial };

class Family {
 public:
  static Family gaussian(double dispersion = 1.0);
  static Family bernoulli();
  static Family poisson();
  static Family cox_full(BaselineHazard baseline);
  static Family cox_partial();

  FamilyKind kind() const { return kind_; }
  bool is_exponential() const {
    return kind_ == FamilyKind::Gaussian || kind_ == FamilyKind::Bernoulli ||
           kind_ == FamilyKind::Poisson;
  }
  bool is_cox() const { return !is_exponential(); }

  double dispersion() const { return dispersion_; }
  const BaselineHazard& baseline() const;

  // cumulant generating function and its derivatives
  double psi(double eta) const;
  double mu(double eta) const;
  double variance(double eta) const;

  // y*eta - psi(eta); carrier term dropped (constant in eta)
  double log_lik(double y, double eta) const;

  // For CoxFull the draw is the uncensored survival time.
  double sample(double eta, CounterRng& rng) const;

 private:
  Family(FamilyKind kind, double dispersion) : kind_(kind), dispersion_(dispersion) {}

  FamilyKind kind_;
  double dispersion_ = 1.0;
  std::shared_ptr<BaselineHazard> baseline_;
};

// numerically safe log(1 + e^x)
inline double log1pexp(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
  if (x >= 0.0) {
    const double z = std::exp(-std::min(x, 700.0));
    return 1.0 / (1.0 + z);
  }
  const double z = std::exp(std::max(x, -700.0));
  return z / (1.0 + z);
}

}  // namespace dina
