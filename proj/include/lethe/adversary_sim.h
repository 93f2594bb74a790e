#ifndef LETHE_ADVERSARY_SIM_H_
#define LETHE_ADVERSARY_SIM_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lethe/distribution.h"
#include "lethe/tuning.h"

namespace lethe {

enum class Scenario { kFlagOnce, kFlagMulti };
enum class Engine { kExact, kAccelerated };

std::string_view ScenarioName(Scenario s);  // "once" / "multi"
Scenario ParseScenario(std::string_view name);
std::string_view EngineName(Engine e);  // "exact" / "accelerated"
Engine ParseEngine(std::string_view name);

// Platform model: `initial_posts` exist at t = 0. At the start of every
// later day, `deletions_per_day` alive posts are deleted uniformly at random,
// then `creations_per_day` posts are created. The adversary watches every
// post continuously until the end of the horizon.
struct SimulationConfig {
  int64_t initial_posts = 100'000'000;
  int64_t creations_per_day = 32'000;
  int64_t deletions_per_day = 10'000;
  int64_t horizon_days = 3650;
  double availability_target = 0.9;
  double mean_down = 3600.0;
  // Tuning estimate; when empty each threshold is tuned with theta* = theta.
  std::optional<Seconds> theta_star;
  std::vector<Seconds> thresholds{180 * kSecondsPerDay};
  Scenario scenario = Scenario::kFlagMulti;
  double scale_factor = 1e-4;
  uint64_t seed = 1;
  Engine engine = Engine::kAccelerated;
  int threads = 1;

  Seconds horizon() const { return horizon_days * kSecondsPerDay; }
  int64_t total_posts() const { return initial_posts + creations_per_day * (horizon_days - 1); }
  // Throws std::invalid_argument for infeasible settings.
  void Validate() const;
};

struct ScenarioCounts {
  int64_t tp = 0;
  int64_t fp = 0;
  int64_t fn = 0;
  double fp_sq_sum = 0.0;  // sum over posts of (per-post FP count)^2

  double precision() const;  // NaN when tp + fp == 0
  double recall() const;     // NaN when tp + fn == 0
};

// Both adversary scenarios evaluated on the same sample path.
struct ThresholdOutcome {
  Seconds theta = 0;
  double shape = 0.0;  // negative binomial shape used for the down phase
  ScenarioCounts once;
  ScenarioCounts multi;
};

struct ThresholdRow {
  Seconds theta;
  double shape;
  int64_t tp;
  int64_t fp;
  int64_t fn;
  double precision;
  double recall;
  double fp_scaled;  // fp / scale_factor
  double fp_sq_sum;
};

struct AdversaryReport {
  Scenario scenario;
  Engine engine;
  double scale_factor;
  uint64_t seed;
  std::vector<ThresholdRow> rows;
};

// Mechanism for one threshold: theta* defaults to theta.
Mechanism MechanismForThreshold(const SimulationConfig& cfg, Seconds theta);

// Runs one threshold with the configured engine and returns both scenarios.
ThresholdOutcome SimulateThreshold(const SimulationConfig& cfg, Seconds theta);

AdversaryReport RunSimulation(const SimulationConfig& cfg);

// deletions_per_day * number of deletion days whose post can be flagged by
// the end of the horizon.
int64_t TruePositiveClosedForm(const SimulationConfig& cfg, Seconds theta);

// Expected flag-multi false positives from the renewal rate of long down
// phases, integrated over the survival curve of every creation cohort.
double AnalyticExpectedFp(const SimulationConfig& cfg, const DurationDistribution& up,
                          const DurationDistribution& down, Seconds theta);

struct FftCell {
  Scenario scenario;
  double availability;
  Seconds theta;
  double shape;
  int64_t fp;
  double fp_scaled;
  double precision;
  double recall;
  double fp_sq_sum;
};

// Grid of availabilities x thresholds; both scenarios per cell.
std::vector<FftCell> FftTable(const SimulationConfig& base,
                              const std::vector<double>& availabilities,
                              const std::vector<Seconds>& thresholds);

}  // namespace lethe

#endif  // LETHE_ADVERSARY_SIM_H_
