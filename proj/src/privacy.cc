#include "lethe/privacy.h"

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace lethe {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void CheckObservation(const ObservationSummary& obs) {
  if (obs.last_up < 0) throw std::invalid_argument("last_up must be non-negative");
  if (obs.down_elapsed < 0) throw std::invalid_argument("down_elapsed must be non-negative");
}

Curve SampleCurve(Seconds t_max, Seconds step, auto&& value_at) {
  if (step < 1) throw std::invalid_argument("curve step must be at least 1 second");
  if (t_max < step) throw std::invalid_argument("curve range shorter than one step");
  Curve curve;
  curve.reserve(static_cast<size_t>(t_max / step));
  for (Seconds t = step; t <= t_max; t += step) curve.push_back({t, value_at(t)});
  return curve;
}

}  // namespace

double LikelihoodRatio::Log10() const {
  if (!finite()) return kInf;
  return log_value / std::log(10.0);
}

double ObservationLikelihoodIfLive(const DurationDistribution& up,
                                   const DurationDistribution& down,
                                   const ObservationSummary& obs) {
  CheckObservation(obs);
  if (obs.last_up == 0) return 0.0;
  return up.Pmf(obs.last_up) * down.Ccdf(obs.down_elapsed - 1);
}

double ObservationLikelihoodIfDeleted(const DurationDistribution& up,
                                      const ObservationSummary& obs) {
  CheckObservation(obs);
  if (obs.last_up == 0) return 1.0;
  return up.Ccdf(obs.last_up) + up.Pmf(obs.last_up);
}

LikelihoodRatio ComputeLikelihoodRatio(const DurationDistribution& up,
                                       const DurationDistribution& down,
                                       const ObservationSummary& obs) {
  CheckObservation(obs);
  // A post that never appeared cannot have had a natural up phase.
  if (obs.last_up == 0) return {LikelihoodKind::kCertain, kInf, kInf};
  const double log_pmf_up = up.LogPmf(obs.last_up);
  if (std::isinf(log_pmf_up)) return {LikelihoodKind::kCertain, kInf, kInf};
  const double log_ccdf_down = down.LogCcdf(obs.down_elapsed - 1);
  if (std::isinf(log_ccdf_down)) return {LikelihoodKind::kInfinite, kInf, kInf};
  // CCDF_up(u) + f_up(u) = CCDF_up(u - 1), which avoids the sum in log space.
  const double log_lr = up.LogCcdf(obs.last_up - 1) - log_pmf_up - log_ccdf_down;
  return {LikelihoodKind::kFinite, std::exp(log_lr), log_lr};
}

double Availability(double mean_up, double mean_down) {
  if (!(mean_up > 0.0) || !(mean_down > 0.0)) {
    throw std::invalid_argument("availability needs positive mean durations");
  }
  return mean_up / (mean_up + mean_down);
}

Curve InverseHazardCurve(const DurationDistribution& d, Seconds t_max, Seconds step) {
  return SampleCurve(t_max, step, [&d](Seconds t) {
    const double log_pmf = d.LogPmf(t);
    if (std::isinf(log_pmf)) return kInf;
    return d.InverseHazard(t);
  });
}

Curve InverseCcdfCurve(const DurationDistribution& d, Seconds t_max, Seconds step) {
  return SampleCurve(t_max, step, [&d](Seconds t) { return std::exp(-d.LogCcdf(t - 1)); });
}

std::vector<Curve> LrCurves(const DurationDistribution& up,
                            const std::vector<DurationDistribution>& downs, Seconds t_max,
                            Seconds step) {
  if (up.kind() != DistributionKind::kGeometric) {
    throw std::invalid_argument("LR curves assume a geometric up distribution");
  }
  std::vector<Curve> curves;
  curves.reserve(downs.size());
  for (const auto& down : downs) {
    curves.push_back(SampleCurve(t_max, step, [&](Seconds t) {
      return ComputeLikelihoodRatio(up, down, {1, t, 0}).value;
    }));
  }
  return curves;
}

void WriteCurveCsv(const std::filesystem::path& path, const Curve& curve, CurveScale scale) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.precision(17);
  out << "t_seconds,value\n";
  for (const auto& [t, value] : curve) {
    out << t << ',';
    const double v = scale == CurveScale::kLog10 ? std::log10(value) : value;
    if (std::isinf(v)) {
      out << (v > 0 ? "inf" : "-inf");
    } else {
      out << v;
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace lethe
