#ifndef LETHE_UTILITY_H_
#define LETHE_UTILITY_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lethe/distribution.h"
#include "lethe/random.h"

namespace lethe {

// Default offset decay: P(offset < 1 h) = 1 - exp(-3600 / 3930) ~ 0.60.
constexpr double kDefaultDecayMean = 3930.0;

struct TracePost {
  std::string post_key;
  Seconds creation_time = 0;
  std::vector<Seconds> offsets;  // sorted, seconds after creation

  friend bool operator==(const TracePost&, const TracePost&) = default;
};

struct InteractionTrace {
  std::vector<TracePost> posts;  // in order of first appearance

  size_t interaction_count() const;
  friend bool operator==(const InteractionTrace&, const InteractionTrace&) = default;
};

// Reads `post_key,creation_epoch_seconds,offset_seconds` rows (one per
// interaction; a header row is optional). Throws std::runtime_error naming
// the line for malformed rows, negative offsets, or a post whose creation
// time disagrees between rows.
InteractionTrace LoadTrace(const std::filesystem::path& path);
void SaveTrace(const InteractionTrace& trace, const std::filesystem::path& path);

// Poisson(interactions_mean) interactions per post with exponential offsets
// of mean decay_mean, floored to whole seconds.
InteractionTrace GenerateSyntheticTrace(int64_t n_posts, double interactions_mean,
                                        double decay_mean, uint64_t seed);

// Offsets uniform over [0, window) seconds.
InteractionTrace GenerateUniformTrace(int64_t n_posts, int64_t interactions_per_post,
                                      Seconds window, uint64_t seed);

struct UtilityResult {
  int64_t allowed = 0;
  int64_t missed = 0;

  int64_t total() const { return allowed + missed; }
  // Empty when the trace has no interactions.
  std::optional<double> utility() const;
};

// Simulates one schedule per post and counts interactions that land while
// the post is visible.
UtilityResult EvaluateUtility(const InteractionTrace& trace, const DurationDistribution& up,
                              const DurationDistribution& down, uint64_t seed, int threads = 1);

}  // namespace lethe

#endif  // LETHE_UTILITY_H_
