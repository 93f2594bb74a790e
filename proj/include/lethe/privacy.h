#ifndef LETHE_PRIVACY_H_
#define LETHE_PRIVACY_H_

#include <filesystem>
#include <string>
#include <vector>

#include "lethe/distribution.h"

namespace lethe {

// What a snapshot adversary sees of a post that is currently hidden.
struct ObservationSummary {
  Seconds last_up = 1;       // duration of the last observed up phase
  Seconds down_elapsed = 1;  // time since the post went down
  Seconds as_of = 0;         // observation time t_c

  friend bool operator==(const ObservationSummary&, const ObservationSummary&) = default;
};

enum class LikelihoodKind {
  kFinite,
  kInfinite,  // the down phase outlived the down distribution's support
  kCertain,   // f_up(last_up) = 0: the up phase could only have been cut by a deletion
};

struct LikelihoodRatio {
  LikelihoodKind kind = LikelihoodKind::kFinite;
  double value = 1.0;      // +inf unless kind == kFinite
  double log_value = 0.0;  // natural log; stays finite when value overflows

  bool finite() const { return kind == LikelihoodKind::kFinite; }
  // log10 of the ratio; +inf for the non-finite kinds.
  double Log10() const;
};

// Likelihood of the observation given the post is not deleted:
// f_up(last_up) * CCDF_down(down_elapsed - 1).
double ObservationLikelihoodIfLive(const DurationDistribution& up,
                                   const DurationDistribution& down,
                                   const ObservationSummary& obs);

// Maximum over deletion times of the observation likelihood given a
// deletion: CCDF_up(last_up) + f_up(last_up).
double ObservationLikelihoodIfDeleted(const DurationDistribution& up,
                                      const ObservationSummary& obs);

// (CCDF_up(dt_u) / f_up(dt_u) + 1) / CCDF_down(dt_d - 1).
// A zero last_up (post never shown) yields kCertain. Throws std::invalid_argument
// on negative inputs.
LikelihoodRatio ComputeLikelihoodRatio(const DurationDistribution& up,
                                       const DurationDistribution& down,
                                       const ObservationSummary& obs);

// Long-run visible fraction mean_up / (mean_up + mean_down).
double Availability(double mean_up, double mean_down);

struct CurvePoint {
  Seconds t;
  double value;  // may be +inf
};
using Curve = std::vector<CurvePoint>;

// Points at t = step, 2 step, ... <= t_max. Throws if step < 1 or t_max < step.
Curve InverseHazardCurve(const DurationDistribution& d, Seconds t_max, Seconds step);
// 1 / CCDF(t - 1).
Curve InverseCcdfCurve(const DurationDistribution& d, Seconds t_max, Seconds step);
// LR(dt_d) for a geometric up distribution, one curve per down candidate.
std::vector<Curve> LrCurves(const DurationDistribution& up,
                            const std::vector<DurationDistribution>& downs, Seconds t_max,
                            Seconds step);

enum class CurveScale { kLinear, kLog10 };

// Writes `t_seconds,value` rows; infinite values are written as "inf".
void WriteCurveCsv(const std::filesystem::path& path, const Curve& curve, CurveScale scale);

}  // namespace lethe

#endif  // LETHE_PRIVACY_H_
