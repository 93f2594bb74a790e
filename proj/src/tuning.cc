#include "lethe/tuning.h"

#include <cmath>
#include <stdexcept>

namespace lethe {
namespace {

constexpr double kLogShapeLo = -18.420680743952367;  // log(1e-8)
constexpr double kLogShapeHi = 0.0;                  // log(1)
constexpr double kMaxElasticity = 1e-4;

double LogTail(double mean_down, Seconds theta_star, double log_shape) {
  return DurationDistribution::NegativeBinomial(mean_down, std::exp(log_shape))
      .LogCcdf(theta_star - 1);
}

}  // namespace

void TuningSpec::Validate() const {
  if (!(availability_target > 0.0 && availability_target < 1.0)) {
    throw std::invalid_argument("availability must lie strictly between 0 and 1");
  }
  if (!(mean_down > 1.0) || !std::isfinite(mean_down)) {
    throw std::invalid_argument("mean down time must exceed 1 second");
  }
  if (!(static_cast<double>(theta_star) > mean_down)) {
    throw std::invalid_argument("theta* must exceed the mean down time");
  }
}

double MeanUpForAvailability(double availability, double mean_down) {
  if (!(availability > 0.0 && availability < 1.0)) {
    throw std::invalid_argument("availability must lie strictly between 0 and 1");
  }
  if (!(mean_down > 0.0)) throw std::invalid_argument("mean down time must be positive");
  return mean_down * availability / (1.0 - availability);
}

ShapeSearchResult OptimizeShape(double mean_down, Seconds theta_star) {
  if (!(static_cast<double>(theta_star) > mean_down)) {
    throw std::invalid_argument("theta* must exceed the mean down time");
  }
  auto objective = [&](double x) { return LogTail(mean_down, theta_star, x); };

  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = kLogShapeLo;
  double b = kLogShapeHi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = objective(c);
  double fd = objective(d);
  while (b - a > 1e-7) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = objective(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = objective(d);
    }
  }
  const double x = 0.5 * (a + b);
  if (x - kLogShapeLo < 1e-3 || kLogShapeHi - x < 1e-3) {
    throw std::runtime_error("shape objective is monotone over [1e-8, 1]");
  }

  const double h = 1e-3;
  const double elasticity = (objective(x + h) - objective(x - h)) / (2.0 * h);
  if (std::fabs(elasticity) > kMaxElasticity) {
    throw std::runtime_error("shape search did not reach a stationary point");
  }
  return {std::exp(x), objective(x), elasticity};
}

double OptimalShape(double mean_down, Seconds theta_star) {
  return OptimizeShape(mean_down, theta_star).shape;
}

Mechanism BuildMechanism(const TuningSpec& spec) {
  spec.Validate();
  const double mean_up = MeanUpForAvailability(spec.availability_target, spec.mean_down);
  return {DurationDistribution::Geometric(mean_up),
          DurationDistribution::NegativeBinomial(spec.mean_down,
                                                 OptimalShape(spec.mean_down, spec.theta_star))};
}

}  // namespace lethe
