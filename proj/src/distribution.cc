#include "lethe/distribution.h"

#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

#include "lethe/special_functions.h"

namespace lethe {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double ZetaMeanForExcess(double excess) {
  // s = 2 + excess; mean = zeta(s - 1) / zeta(s).
  return HurwitzZeta(1.0 + excess, 1.0) / HurwitzZeta(2.0 + excess, 1.0);
}

// Solves zeta(s-1)/zeta(s) = mean for s > 2 by bisection on log(s - 2).
double SolveZetaExponent(double mean) {
  double lo = std::log(1e-14);
  double hi = std::log(100.0);
  if (!(mean < ZetaMeanForExcess(std::exp(lo))) ||
      !(mean > ZetaMeanForExcess(std::exp(hi)))) {
    throw std::invalid_argument("no zeta exponent s > 2 yields the requested mean");
  }
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (ZetaMeanForExcess(std::exp(mid)) > mean) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 2.0 + std::exp(0.5 * (lo + hi));
}

Seconds RequireIntegral(double value, const char* what) {
  const double rounded = std::round(value);
  if (std::fabs(rounded - value) > 1e-6 * std::fabs(value)) {
    throw std::invalid_argument(std::string(what) + " needs an integral value");
  }
  return static_cast<Seconds>(rounded);
}

}  // namespace

std::string_view KindName(DistributionKind kind) {
  switch (kind) {
    case DistributionKind::kGeometric:
      return "geometric";
    case DistributionKind::kNegativeBinomial:
      return "negative_binomial";
    case DistributionKind::kZeta:
      return "zeta";
    case DistributionKind::kPoisson:
      return "poisson";
    case DistributionKind::kDegenerate:
      return "degenerate";
    case DistributionKind::kDiscreteUniform:
      return "discrete_uniform";
  }
  return "unknown";
}

DistributionKind ParseKind(std::string_view name) {
  if (name == "geometric") return DistributionKind::kGeometric;
  if (name == "negative_binomial" || name == "negative-binomial" || name == "nbinom") {
    return DistributionKind::kNegativeBinomial;
  }
  if (name == "zeta") return DistributionKind::kZeta;
  if (name == "poisson") return DistributionKind::kPoisson;
  if (name == "degenerate") return DistributionKind::kDegenerate;
  if (name == "discrete_uniform" || name == "discrete-uniform" || name == "uniform") {
    return DistributionKind::kDiscreteUniform;
  }
  throw std::invalid_argument("unknown distribution kind: " + std::string(name));
}

DurationDistribution DurationDistribution::Make(DistributionKind kind, double mean,
                                                std::optional<double> shape) {
  if (!std::isfinite(mean) || !(mean > 1.0)) {
    throw std::invalid_argument("distribution mean must be a finite value above 1 second");
  }
  if (kind == DistributionKind::kNegativeBinomial) {
    if (!shape) throw std::invalid_argument("negative binomial requires a shape parameter");
    return NegativeBinomial(mean, *shape);
  }
  if (shape) {
    throw std::invalid_argument("shape parameter only applies to the negative binomial");
  }
  switch (kind) {
    case DistributionKind::kGeometric:
      return Geometric(mean);
    case DistributionKind::kZeta:
      return Zeta(mean);
    case DistributionKind::kPoisson:
      return Poisson(mean);
    case DistributionKind::kDegenerate:
      return Degenerate(RequireIntegral(mean, "degenerate distribution"));
    case DistributionKind::kDiscreteUniform:
      return DiscreteUniform(1, RequireIntegral(2.0 * mean - 1.0, "discrete uniform mean"));
    case DistributionKind::kNegativeBinomial:
      break;
  }
  throw std::invalid_argument("unsupported distribution kind");
}

DurationDistribution DurationDistribution::Geometric(double mean) {
  if (!std::isfinite(mean) || !(mean >= 1.0)) {
    throw std::invalid_argument("geometric mean must be at least 1");
  }
  const double p = 1.0 / mean;
  return {GeometricParams{p, std::log(p), std::log1p(-p)}, mean};
}

DurationDistribution DurationDistribution::NegativeBinomial(double mean, double shape) {
  if (!std::isfinite(mean) || !(mean > 1.0)) {
    throw std::invalid_argument("negative binomial mean must exceed 1 second");
  }
  if (!std::isfinite(shape) || !(shape > 0.0)) {
    throw std::invalid_argument("negative binomial shape must be positive");
  }
  const double mean0 = mean - 1.0;
  const double total = shape + mean0;
  NegativeBinomialParams params{shape,
                                mean0,
                                shape / total,
                                mean0 / total,
                                std::log(shape) - std::log(total),
                                -std::log1p(shape / mean0)};
  return {params, mean};
}

DurationDistribution DurationDistribution::Zeta(double mean) {
  if (!std::isfinite(mean) || !(mean > 1.0)) {
    throw std::invalid_argument("zeta mean must exceed 1 second");
  }
  const double s = SolveZetaExponent(mean);
  const double analytic_mean = ZetaMeanForExcess(s - 2.0);
  return {ZetaParams{s, std::log(HurwitzZeta(s, 1.0))}, analytic_mean};
}

DurationDistribution DurationDistribution::Poisson(double mean) {
  if (!std::isfinite(mean) || !(mean > 1.0)) {
    throw std::invalid_argument("poisson mean must exceed 1 second");
  }
  return {PoissonParams{mean - 1.0}, mean};
}

DurationDistribution DurationDistribution::Degenerate(Seconds value) {
  if (value < 1) throw std::invalid_argument("degenerate duration must be positive");
  return {DegenerateParams{value}, static_cast<double>(value)};
}

DurationDistribution DurationDistribution::DiscreteUniform(Seconds lo, Seconds hi) {
  if (lo < 1 || hi < lo) throw std::invalid_argument("uniform support must be 1 <= lo <= hi");
  return {UniformParams{lo, hi}, 0.5 * (static_cast<double>(lo) + static_cast<double>(hi))};
}

DistributionKind DurationDistribution::kind() const {
  return std::visit(
      Overloaded{
          [](const GeometricParams&) { return DistributionKind::kGeometric; },
          [](const NegativeBinomialParams&) { return DistributionKind::kNegativeBinomial; },
          [](const ZetaParams&) { return DistributionKind::kZeta; },
          [](const PoissonParams&) { return DistributionKind::kPoisson; },
          [](const DegenerateParams&) { return DistributionKind::kDegenerate; },
          [](const UniformParams&) { return DistributionKind::kDiscreteUniform; },
      },
      params_);
}

double DurationDistribution::variance() const {
  return std::visit(
      Overloaded{
          [](const GeometricParams& g) { return (1.0 - g.p) / (g.p * g.p); },
          [](const NegativeBinomialParams& nb) { return nb.mean0 * (1.0 + nb.mean0 / nb.n); },
          [this](const ZetaParams& z) {
            if (z.s <= 3.0) return std::numeric_limits<double>::infinity();
            const double second = HurwitzZeta(z.s - 2.0, 1.0) / std::exp(z.log_zeta_s);
            return second - mean_ * mean_;
          },
          [](const PoissonParams& p) { return p.lambda; },
          [](const DegenerateParams&) { return 0.0; },
          [](const UniformParams& u) {
            const double width = static_cast<double>(u.hi - u.lo + 1);
            return (width * width - 1.0) / 12.0;
          },
      },
      params_);
}

std::optional<double> DurationDistribution::shape() const {
  if (const auto* nb = std::get_if<NegativeBinomialParams>(&params_)) return nb->n;
  return std::nullopt;
}

double DurationDistribution::success_probability() const {
  if (const auto* g = std::get_if<GeometricParams>(&params_)) return g->p;
  if (const auto* nb = std::get_if<NegativeBinomialParams>(&params_)) return nb->p;
  throw std::logic_error("success probability only defined for geometric/negative binomial");
}

double DurationDistribution::tail_exponent() const {
  if (const auto* z = std::get_if<ZetaParams>(&params_)) return z->s;
  throw std::logic_error("tail exponent only defined for zeta");
}

double DurationDistribution::LogPmf(Seconds k) const {
  if (k < 1) throw std::out_of_range("pmf is defined for durations k >= 1");
  const double kd = static_cast<double>(k);
  return std::visit(
      Overloaded{
          [kd](const GeometricParams& g) { return g.log_p + (kd - 1.0) * g.log_q; },
          [kd](const NegativeBinomialParams& nb) {
            const double y = kd - 1.0;
            // lgamma(y + n) - lgamma(y + 1) - lgamma(n)
            const double log_coeff = LogGammaDelta(y + 1.0, nb.n - 1.0) - std::lgamma(nb.n);
            return log_coeff + nb.n * nb.log_p + (y > 0 ? y * nb.log_q : 0.0);
          },
          [kd](const ZetaParams& z) { return -z.s * std::log(kd) - z.log_zeta_s; },
          [kd](const PoissonParams& p) {
            const double y = kd - 1.0;
            return -p.lambda + y * std::log(p.lambda) - std::lgamma(y + 1.0);
          },
          [k](const DegenerateParams& d) { return k == d.value ? 0.0 : kNegInf; },
          [k](const UniformParams& u) {
            if (k < u.lo || k > u.hi) return kNegInf;
            return -std::log(static_cast<double>(u.hi - u.lo + 1));
          },
      },
      params_);
}

double DurationDistribution::Pmf(Seconds k) const { return std::exp(LogPmf(k)); }

double DurationDistribution::LogCcdf(Seconds k) const {
  if (k <= 0) return 0.0;
  const double kd = static_cast<double>(k);
  return std::visit(
      Overloaded{
          [kd](const GeometricParams& g) { return kd * g.log_q; },
          [kd](const NegativeBinomialParams& nb) {
            // P(X > k) = P(Y >= k) = I_q(k, n) for the unshifted count Y.
            return LogIncompleteBeta(nb.q, nb.p, kd, nb.n).log_lower;
          },
          [kd](const ZetaParams& z) {
            return std::log(HurwitzZeta(z.s, kd + 1.0)) - z.log_zeta_s;
          },
          [kd](const PoissonParams& p) {
            // P(Y >= k) for Y ~ Poisson(lambda) is the lower regularized gamma P(k, lambda).
            return LogIncompleteGamma(kd, p.lambda).log_lower;
          },
          [k](const DegenerateParams& d) { return k < d.value ? 0.0 : kNegInf; },
          [k](const UniformParams& u) {
            if (k < u.lo) return 0.0;
            if (k >= u.hi) return kNegInf;
            return std::log(static_cast<double>(u.hi - k)) -
                   std::log(static_cast<double>(u.hi - u.lo + 1));
          },
      },
      params_);
}

double DurationDistribution::Ccdf(Seconds k) const { return std::exp(LogCcdf(k)); }

double DurationDistribution::InverseHazard(Seconds k) const {
  const double log_pmf = LogPmf(k);
  if (log_pmf == kNegInf) {
    throw std::domain_error("inverse hazard undefined outside the support");
  }
  // Memoryless: (1 - p) / p = mean - 1 for every k.
  if (std::holds_alternative<GeometricParams>(params_)) return mean_ - 1.0;
  return std::exp(LogCcdf(k) - log_pmf);
}

Seconds DurationDistribution::Sample(RandomStream& rng) const {
  return std::visit(
      Overloaded{
          [&rng](const GeometricParams& g) -> Seconds {
            if (g.p >= 1.0) return 1;
            return std::geometric_distribution<Seconds>(g.p)(rng) + 1;
          },
          [&rng](const NegativeBinomialParams& nb) -> Seconds {
            // Gamma-Poisson mixture with the gamma drawn in log space:
            // Gamma(n) = Gamma(n + 1) * U^(1/n), which underflows for n ~ 1e-4.
            const double g1 = std::gamma_distribution<double>(nb.n + 1.0, 1.0)(rng);
            const double log_rate = std::log(g1) + std::log(rng.UniformPositive()) / nb.n +
                                    std::log(nb.mean0 / nb.n);
            if (log_rate < -30.0) return 1;
            const double rate = std::min(std::exp(log_rate), 1e15);
            return std::poisson_distribution<Seconds>(rate)(rng) + 1;
          },
          [&rng](const ZetaParams& z) -> Seconds {
            // Devroye's rejection sampler for the zeta (Zipf) law.
            const double sm1 = z.s - 1.0;
            const double b = std::exp2(sm1);
            constexpr double kCap = 4.0e18;
            while (true) {
              const double u = rng.UniformPositive();
              const double v = rng.Uniform();
              const double x = std::floor(std::pow(u, -1.0 / sm1));
              if (!(x >= 1.0) || x > kCap) continue;
              const double t = std::pow(1.0 + 1.0 / x, sm1);
              if (v * x * (t - 1.0) / (b - 1.0) <= t / b) return static_cast<Seconds>(x);
            }
          },
          [&rng](const PoissonParams& p) -> Seconds {
            return std::poisson_distribution<Seconds>(p.lambda)(rng) + 1;
          },
          [](const DegenerateParams& d) -> Seconds { return d.value; },
          [&rng](const UniformParams& u) -> Seconds {
            return std::uniform_int_distribution<Seconds>(u.lo, u.hi)(rng);
          },
      },
      params_);
}

std::string DurationDistribution::Label() const {
  std::string label(KindName(kind()));
  if (auto n = shape()) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "_n%g", *n);
    label += buf;
  }
  return label;
}

}  // namespace lethe
