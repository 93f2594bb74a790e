#ifndef LETHE_SCHEDULE_H_
#define LETHE_SCHEDULE_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lethe/distribution.h"
#include "lethe/privacy.h"
#include "lethe/random.h"

namespace lethe {

constexpr Seconds kDefaultCoverage = 365 * 86400;

// Stream tags used when deriving per-post generators from a global seed.
enum StreamTag : uint64_t {
  kScheduleStream = 1,
  kDeletionStream = 2,
  kTraceStream = 3,
  kUtilityStream = 4,
};

// Alternating up/down toggle times of one post. The post is up on
// [created_at, toggles[0]), down on [toggles[0], toggles[1]), and so on; an
// instant equal to a toggle belongs to the phase that starts there.
//
// The generator state travels with the schedule, so extending in several
// steps yields the same toggles as extending once.
class Schedule {
 public:
  static Schedule Generate(const DurationDistribution& up, const DurationDistribution& down,
                           Seconds created_at, Seconds horizon, RandomStream rng);

  // Copy whose coverage reaches `until` (absolute). The existing toggles are
  // a prefix of the result. Throws std::invalid_argument if `until` does not
  // exceed the current coverage.
  Schedule Extended(const DurationDistribution& up, const DurationDistribution& down,
                    Seconds until) const;

  Seconds created_at() const { return created_at_; }
  Seconds covered_until() const { return covered_until_; }
  const std::vector<Seconds>& toggles() const { return toggles_; }
  const RandomStream& stream() const { return rng_; }

  // Number of toggles at or before t.
  size_t TogglesThrough(Seconds t) const;
  // Schedule-only visibility (ignores deletion). Requires created_at <= t <= covered_until.
  bool UpAt(Seconds t) const;
  // Start of the phase containing t.
  Seconds PhaseStart(Seconds t) const;

  void WriteCsv(const std::filesystem::path& path) const;

  friend bool operator==(const Schedule&, const Schedule&) = default;

 private:
  void Advance(const DurationDistribution& up, const DurationDistribution& down, Seconds until);
  void CheckCovered(Seconds t) const;

  Seconds created_at_ = 0;
  Seconds covered_until_ = 0;
  std::vector<Seconds> toggles_;
  // First toggle beyond coverage, already drawn from rng_.
  Seconds pending_toggle_ = 0;
  RandomStream rng_;
};

struct PostRecord {
  std::string post_id;
  std::string owner_token;
  std::string content;
  Schedule schedule;
  std::optional<Seconds> deleted_at;

  bool RealState(Seconds t) const { return !deleted_at || t < *deleted_at; }
};

// Eq. (1): hidden once deleted, otherwise the schedule decides.
bool Observable(const PostRecord& post, Seconds t);

// The adversary's view at t_c, or nullopt while the post is visible.
// down_elapsed is 0 at the instant the post goes down. last_up is 0 only
// when the post was deleted at its creation instant and never appeared.
std::optional<ObservationSummary> SummarizeObservation(const PostRecord& post, Seconds t_c);

// Completed down phases of length >= theta that start inside [t_a, t_b].
size_t DownPeriodCountExceeding(const Schedule& s, Seconds theta, Seconds t_a, Seconds t_b);

}  // namespace lethe

#endif  // LETHE_SCHEDULE_H_
