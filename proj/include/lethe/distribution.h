#ifndef LETHE_DISTRIBUTION_H_
#define LETHE_DISTRIBUTION_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "lethe/random.h"

namespace lethe {

// Durations are positive integers in seconds.
using Seconds = int64_t;

enum class DistributionKind {
  kGeometric,
  kNegativeBinomial,
  kZeta,
  kPoisson,
  kDegenerate,
  kDiscreteUniform,
};

std::string_view KindName(DistributionKind kind);
// Accepts the names produced by KindName plus a few CLI spellings
// ("negative-binomial", "nbinom", "uniform"). Throws std::invalid_argument.
DistributionKind ParseKind(std::string_view name);

// A discrete distribution over durations {1, 2, ...}. Immutable after
// construction; safe to share between threads. Kinds whose natural support
// starts at 0 (negative binomial, Poisson) are shifted by +1 so that every
// duration is at least one second; their "pre-shift" mean is mean - 1.
//
// All mass and tail evaluations go through log space, so shape parameters
// around 1e-4 and durations around 1e7 seconds do not underflow.
class DurationDistribution {
 public:
  // Builds a distribution of the given kind with the requested mean.
  // `shape` is required for the negative binomial and rejected otherwise.
  // Zeta solves for the tail exponent s > 2 that yields `mean`.
  static DurationDistribution Make(DistributionKind kind, double mean,
                                   std::optional<double> shape = std::nullopt);

  static DurationDistribution Geometric(double mean);
  static DurationDistribution NegativeBinomial(double mean, double shape);
  static DurationDistribution Zeta(double mean);
  static DurationDistribution Poisson(double mean);
  static DurationDistribution Degenerate(Seconds value);
  static DurationDistribution DiscreteUniform(Seconds lo, Seconds hi);

  DistributionKind kind() const;
  double mean() const { return mean_; }
  // Infinite when the second moment diverges (zeta with s <= 3).
  double variance() const;
  // Negative binomial shape n; empty for other kinds.
  std::optional<double> shape() const;

  // Success probability of the geometric or (unshifted) negative binomial.
  double success_probability() const;
  // Zeta tail exponent s.
  double tail_exponent() const;

  // f(k) = P(X = k). k >= 1, otherwise std::out_of_range.
  double Pmf(Seconds k) const;
  double LogPmf(Seconds k) const;

  // P(X > k). Defined for every integer; equals 1 for k <= 0.
  double Ccdf(Seconds k) const;
  double LogCcdf(Seconds k) const;

  // CCDF(k) / f(k). Throws std::domain_error where f(k) = 0.
  double InverseHazard(Seconds k) const;

  Seconds Sample(RandomStream& rng) const;

  // File-name friendly label, e.g. "negative_binomial_n0.0006".
  std::string Label() const;

 private:
  struct GeometricParams {
    double p;
    double log_p;
    double log_q;
  };
  struct NegativeBinomialParams {
    double n;
    double mean0;  // pre-shift mean
    double p;      // n / (n + mean0)
    double q;      // mean0 / (n + mean0)
    double log_p;
    double log_q;
  };
  struct ZetaParams {
    double s;
    double log_zeta_s;
  };
  struct PoissonParams {
    double lambda;  // pre-shift mean
  };
  struct DegenerateParams {
    Seconds value;
  };
  struct UniformParams {
    Seconds lo;
    Seconds hi;
  };
  using Params = std::variant<GeometricParams, NegativeBinomialParams, ZetaParams,
                              PoissonParams, DegenerateParams, UniformParams>;

  DurationDistribution(Params params, double mean)
      : params_(params), mean_(mean) {}

  Params params_;
  double mean_;
};

}  // namespace lethe

#endif  // LETHE_DISTRIBUTION_H_
