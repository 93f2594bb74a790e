#include "lethe/special_functions.h"

#include <cfloat>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace lethe {
namespace {

constexpr double kTiny = 1e-300;
constexpr double kEps = 4 * DBL_EPSILON;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr int kMaxIterations = 5'000'000;

// Stirling series remainder of log Gamma(z), valid for z >= 20.
double StirlingCorrection(double z) {
  const double z2 = z * z;
  return (1.0 / 12.0 -
          (1.0 / 360.0 -
           (1.0 / 1260.0 - (1.0 / 1680.0 - 1.0 / (1188.0 * z2)) / z2) / z2) /
              z2) /
         z;
}

// Modified Lentz evaluation of the incomplete beta continued fraction.
// Converges quickly for x < (a + 1) / (a + b + 2).
double BetaContinuedFraction(double x, double a, double b) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double dm = m;
    const double m2 = 2.0 * dm;
    double aa = dm * (b - dm) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + dm) * (qab + dm) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw std::runtime_error("incomplete beta continued fraction did not converge");
}

}  // namespace

double Log1mExp(double x) {
  if (x > -M_LN2) return std::log(-std::expm1(x));
  return std::log1p(-std::exp(x));
}

double LogGammaDelta(double a, double delta) {
  const double b = a + delta;
  if (a >= 20.0 && b >= 20.0) {
    return (a - 0.5) * std::log1p(delta / a) + delta * std::log(b) - delta +
           (StirlingCorrection(b) - StirlingCorrection(a));
  }
  return std::lgamma(b) - std::lgamma(a);
}

double LogBeta(double a, double b) {
  if (a < b) std::swap(a, b);
  if (a >= 20.0) return std::lgamma(b) - LogGammaDelta(a, b);
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

LogBetaTails LogIncompleteBeta(double x, double y, double a, double b) {
  if (!(x >= 0.0 && x <= 1.0 && y >= 0.0 && y <= 1.0) ||
      std::fabs(x + y - 1.0) > 1e-12) {
    throw std::invalid_argument("incomplete beta: x must lie in [0, 1]");
  }
  if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    throw std::invalid_argument("incomplete beta: a and b must be positive");
  }
  if (x == 0.0) return {kNegInf, 0.0};
  if (y == 0.0) return {0.0, kNegInf};

  const double log_x = x < 0.5 ? std::log(x) : std::log1p(-y);
  const double log_y = y < 0.5 ? std::log(y) : std::log1p(-x);
  const double log_front = a * log_x + b * log_y - LogBeta(a, b);

  // Compare through y so the switch stays exact when x rounds to 1.
  if (y > (b + 1.0) / (a + b + 2.0)) {
    const double lower =
        log_front + std::log(BetaContinuedFraction(x, a, b)) - std::log(a);
    return {lower, Log1mExp(std::min(lower, 0.0))};
  }
  const double upper =
      log_front + std::log(BetaContinuedFraction(y, b, a)) - std::log(b);
  return {Log1mExp(std::min(upper, 0.0)), upper};
}

double RegularizedIncompleteBeta(double x, double a, double b) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw std::invalid_argument("incomplete beta: x must lie in [0, 1]");
  }
  return std::exp(LogIncompleteBeta(x, 1.0 - x, a, b).log_lower);
}

LogGammaTails LogIncompleteGamma(double a, double x) {
  if (!(a > 0.0) || !(x >= 0.0) || !std::isfinite(a)) {
    throw std::invalid_argument("incomplete gamma: need a > 0 and x >= 0");
  }
  if (x == 0.0) return {kNegInf, 0.0};
  if (std::isinf(x)) return {0.0, kNegInf};
  const double log_prefix = a * std::log(x) - x - std::lgamma(a);

  if (x < a + 1.0) {
    double ap = a;
    double del = 1.0 / a;
    double sum = del;
    for (int n = 0; n < kMaxIterations; ++n) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * kEps) {
        const double lower = log_prefix + std::log(sum);
        return {lower, Log1mExp(std::min(lower, 0.0))};
      }
    }
    throw std::runtime_error("incomplete gamma series did not converge");
  }

  double bb = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / bb;
  double h = d;
  for (int i = 1; i <= kMaxIterations; ++i) {
    const double an = -i * (i - a);
    bb += 2.0;
    d = an * d + bb;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = bb + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) {
      const double upper = log_prefix + std::log(h);
      return {Log1mExp(std::min(upper, 0.0)), upper};
    }
  }
  throw std::runtime_error("incomplete gamma fraction did not converge");
}

double HurwitzZeta(double s, double q) {
  if (!(s > 1.0) || !(q > 0.0)) {
    throw std::invalid_argument("Hurwitz zeta needs s > 1 and q > 0");
  }
  // Euler-Maclaurin with N direct terms and Bernoulli corrections.
  static constexpr double kB2j[] = {
      1.0 / 6.0,       -1.0 / 30.0,       1.0 / 42.0,   -1.0 / 30.0,
      5.0 / 66.0,      -691.0 / 2730.0,   7.0 / 6.0,    -3617.0 / 510.0,
      43867.0 / 798.0, -174611.0 / 330.0,
  };
  constexpr int kDirect = 10;
  double sum = 0.0;
  for (int k = 0; k < kDirect; ++k) sum += std::pow(q + k, -s);
  const double w = q + kDirect;
  sum += std::pow(w, 1.0 - s) / (s - 1.0);
  const double w_s = std::pow(w, -s);
  sum += 0.5 * w_s;
  // term_j = B_2j / (2j)! * s (s+1) ... (s+2j-2) * w^(-s-2j+1)
  double rising = s;           // s (s+1) ... (s+2j-2)
  double factorial = 2.0;      // (2j)!
  double power = w_s / w;      // w^(-s-2j+1)
  for (int j = 1; j <= 10; ++j) {
    const double term = kB2j[j - 1] / factorial * rising * power;
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * DBL_EPSILON) break;
    rising *= (s + 2 * j - 1) * (s + 2 * j);
    factorial *= (2.0 * j + 1) * (2.0 * j + 2);
    power /= w * w;
  }
  return sum;
}

}  // namespace lethe
