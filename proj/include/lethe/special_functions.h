#ifndef LETHE_SPECIAL_FUNCTIONS_H_
#define LETHE_SPECIAL_FUNCTIONS_H_

namespace lethe {

// Regularized incomplete beta I_x(a, b). Rejects x outside [0, 1] and
// non-positive a or b with std::invalid_argument.
double RegularizedIncompleteBeta(double x, double a, double b);

// Natural logs of both tails of the regularized incomplete beta function.
// `x` and `y` must satisfy x + y == 1; passing both avoids the cancellation
// in 1 - x when x is within a few ulps of 1.
struct LogBetaTails {
  double log_lower;  // log I_x(a, b)
  double log_upper;  // log (1 - I_x(a, b))
};
LogBetaTails LogIncompleteBeta(double x, double y, double a, double b);

// Logs of the regularized incomplete gamma tails P(a, x) and Q(a, x).
struct LogGammaTails {
  double log_lower;
  double log_upper;
};
LogGammaTails LogIncompleteGamma(double a, double x);

// log Gamma(a + delta) - log Gamma(a), accurate when |delta| << a.
double LogGammaDelta(double a, double delta);

// log B(a, b) without the cancellation of lgamma(a) - lgamma(a + b) for a >> b.
double LogBeta(double a, double b);

// Hurwitz zeta sum_{k>=0} (k + q)^-s for s > 1, q > 0.
double HurwitzZeta(double s, double q);

// log(1 - exp(x)) for x <= 0.
double Log1mExp(double x);

}  // namespace lethe

#endif  // LETHE_SPECIAL_FUNCTIONS_H_
