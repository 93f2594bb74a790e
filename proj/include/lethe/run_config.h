#ifndef LETHE_RUN_CONFIG_H_
#define LETHE_RUN_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "lethe/distribution.h"

namespace lethe {

// "90", "90s", "15m", "1h", "30d", "1.5h" -> seconds. Throws
// std::invalid_argument for anything else, including non-positive values
// and fractions of a second.
Seconds ParseDuration(std::string_view text);

struct TuningSection {
  std::optional<double> availability;
  std::optional<Seconds> mean_down;
  std::optional<Seconds> theta_star;
};

struct SimulationSection {
  std::optional<int64_t> initial_posts;
  std::optional<int64_t> creations_per_day;
  std::optional<int64_t> deletions_per_day;
  std::optional<int64_t> horizon_days;
  std::optional<std::vector<Seconds>> thresholds;
  std::optional<std::vector<double>> availabilities;
  std::optional<std::string> scenario;
  std::optional<std::string> engine;
  std::optional<double> scale_factor;
};

struct UtilitySection {
  std::optional<std::string> trace;
  std::optional<int64_t> synthetic_posts;
  std::optional<double> interactions_mean;
  std::optional<Seconds> decay_mean;
};

struct StoreSection {
  std::optional<int64_t> port;
  std::optional<std::string> data_dir;
  std::optional<Seconds> updater_period;
};

// Settings file. Durations are numbers of seconds or strings with a unit
// suffix. Every key is optional; command-line flags take precedence.
//
// {"seed": 7, "threads": 4, "out_dir": "runs/a",
//  "tuning": {"availability": 0.9, "mean_down": "1h", "theta_star": "30d"},
//  "simulation": {"initial_posts": 1000000, "creations_per_day": 320,
//                 "deletions_per_day": 100, "horizon_days": 3650,
//                 "thresholds": ["30d", "180d"], "availabilities": [0.9],
//                 "scenario": "multi", "engine": "accelerated",
//                 "scale_factor": 1e-6},
//  "utility": {"trace": "t.csv", "synthetic_posts": 2000,
//              "interactions_mean": 20, "decay_mean": 3930},
//  "store": {"port": 7070, "data_dir": "store", "updater_period": "1h"}}
struct RunConfig {
  std::optional<uint64_t> seed;
  std::optional<int64_t> threads;
  std::optional<std::string> out_dir;
  TuningSection tuning;
  SimulationSection simulation;
  UtilitySection utility;
  StoreSection store;
};

// Throws std::invalid_argument naming the offending key for unknown keys
// or mistyped values.
RunConfig ParseRunConfig(const nlohmann::json& doc);
RunConfig LoadRunConfig(const std::filesystem::path& path);

}  // namespace lethe

#endif  // LETHE_RUN_CONFIG_H_
