#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace dina {

// Counter-based generator: output i of stream (seed, stream) is a pure
// function of (seed, stream, i), so every stream is reproducible across
// platforms and replications can jump to disjoint streams without state
// hand-off.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(mix64(seed ^ (stream * 0x9E3779B97F4A7C15ULL) ^ 0x5851F42D4C957F2DULL)) {}

  std::uint64_t next_u64() { return mix64(key_ ^ mix64(counter_++ + 0x632BE59BD9B4E019ULL)); }

  // uniform on (0,1): never returns an exact endpoint
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller; two uniforms per draw, no cached spare
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  double exponential() { return -std::log(uniform()); }

  bool bernoulli(double p) { return uniform() < p; }

  // Knuth multiplication for modest means, normal approximation beyond
  long poisson(double mean) {
    if (mean < 0.0) throw std::invalid_argument("poisson: negative mean");
    if (mean == 0.0) return 0;
    if (mean > 200.0) {
      const double z = mean + std::sqrt(mean) * normal();
      return z > 0.0 ? static_cast<long>(std::lround(z)) : 0L;
    }
    const double limit = std::exp(-mean);
    long k = 0;
    double prod = uniform();
    while (prod > limit) {
      ++k;
      prod *= uniform();
    }
    return k;
  }

 private:
  static std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Stream ids used by the simulator so that e.g. the covariate draw is
// unaffected by how many response draws another stream consumed.
enum class RngStream : std::uint64_t {
  kCovariates = 1,
  kTreatment = 2,
  kResponse = 3,
  kCensoring = 4,
  kFolds = 5,
  kBootstrap = 6,
  kSubsample = 7,
  kEvaluation = 8,
};

inline CounterRng make_stream(std::uint64_t seed, RngStream s) {
  return CounterRng(seed, static_cast<std::uint64_t>(s));
}

}  // namespace dina
