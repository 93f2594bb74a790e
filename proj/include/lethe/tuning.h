#ifndef LETHE_TUNING_H_
#define LETHE_TUNING_H_

#include "lethe/distribution.h"

namespace lethe {

constexpr Seconds kSecondsPerHour = 3600;
constexpr Seconds kSecondsPerDay = 86400;

struct TuningSpec {
  double availability_target = 0.9;
  double mean_down = 3600.0;               // seconds
  Seconds theta_star = 30 * kSecondsPerDay;  // adversary threshold estimate

  // Throws std::invalid_argument when a field is out of range.
  void Validate() const;
};

// Inverts availability = mean_up / (mean_up + mean_down).
double MeanUpForAvailability(double availability, double mean_down);

struct ShapeSearchResult {
  double shape;
  double log_ccdf;    // log CCDF(theta* - 1) at the returned shape
  double elasticity;  // d log CCDF / d log n by central differences
};

// Shape n of the negative binomial down distribution (with the given mean)
// that maximizes CCDF(theta_star - 1). Golden-section search on log n over
// [1e-8, 1]. Throws std::runtime_error if the optimum sits on the bracket
// edge or the stationarity check fails.
ShapeSearchResult OptimizeShape(double mean_down, Seconds theta_star);
double OptimalShape(double mean_down, Seconds theta_star);

struct Mechanism {
  DurationDistribution up;
  DurationDistribution down;
};

// Geometric up with the availability-matching mean and a negative binomial
// down with the tuned shape.
Mechanism BuildMechanism(const TuningSpec& spec);

}  // namespace lethe

#endif  // LETHE_TUNING_H_
