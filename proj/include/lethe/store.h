#ifndef LETHE_STORE_H_
#define LETHE_STORE_H_

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <queue>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "lethe/schedule.h"
#include "lethe/tuning.h"

namespace lethe {

class Clock {
 public:
  virtual ~Clock() = default;
  virtual Seconds Now() const = 0;
};

// Wall-clock seconds that never run backwards.
class SystemClock : public Clock {
 public:
  Seconds Now() const override;

 private:
  mutable std::atomic<Seconds> last_{0};
};

// Test clock advanced by hand.
class ManualClock : public Clock {
 public:
  explicit ManualClock(Seconds start = 0) : now_(start) {}
  Seconds Now() const override { return now_.load(); }
  void Set(Seconds t) { now_.store(t); }
  void Advance(Seconds dt) { now_.fetch_add(dt); }

 private:
  std::atomic<Seconds> now_;
};

// Raised when the event log cannot be written; the caller may retry.
class StorageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct StoreOptions {
  Mechanism mechanism;
  uint64_t seed = 1;
  Seconds coverage = kDefaultCoverage;
  // In-memory only when empty.
  std::optional<std::filesystem::path> data_dir;
  // Events between snapshots.
  size_t snapshot_every = 4096;
};

struct UpdateResult {
  size_t extended = 0;
  size_t skipped = 0;  // unknown or deleted ids
};

// Visibility-gated archive. Owners always read their live posts; everyone
// else reads a post only while its schedule has it up. Hidden, deleted and
// unknown posts all read as nullopt.
//
// Thread-safe: the index is guarded by a shared mutex and each post by its
// own mutex, so operations on one post are serialized.
class Store {
 public:
  Store(StoreOptions options, std::shared_ptr<const Clock> clock);
  ~Store();
  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  // Throws std::invalid_argument for empty content or token, StorageError
  // if the event cannot be persisted.
  std::string Put(const std::string& content, const std::string& token);
  std::optional<std::string> Get(const std::string& post_id, const std::string& token);
  // False for a wrong token, an unknown id, or an already deleted post.
  bool Delete(const std::string& post_id, const std::string& token);

  // Extends every live post in the batch to cover now + coverage.
  UpdateResult UpdateTs(const std::vector<std::string>& post_ids);
  // One updater pass over posts in order of soonest coverage expiry.
  size_t RunUpdaterPass();
  void StartUpdater(std::chrono::milliseconds period);
  void StopUpdater();

  // Internal hooks for tests and tooling; not part of the wire surface.
  std::optional<Schedule> ScheduleOf(const std::string& post_id) const;
  bool IsTombstone(const std::string& post_id) const;
  size_t size() const;
  void Snapshot();

 private:
  struct Entry {
    mutable std::mutex mu;
    PostRecord record;
    uint64_t seq = 0;
  };

  std::shared_ptr<Entry> Find(const std::string& post_id) const;
  Schedule NewSchedule(uint64_t seq, Seconds created_at, Seconds until) const;
  std::string IdFor(uint64_t seq) const;
  // Extra coverage granted per extension so hourly passes do not touch
  // every post.
  Seconds ExtensionSlack() const { return options_.coverage / 8; }
  // Caller holds entry.mu.
  void EnsureCovered(Entry& entry, Seconds until, bool log);
  void AppendEvent(const std::string& line);
  void MaybeSnapshot();
  void Recover();
  void Track(Seconds covered_until, const std::string& post_id);

  StoreOptions options_;
  std::shared_ptr<const Clock> clock_;

  mutable std::shared_mutex index_mu_;
  std::unordered_map<std::string, std::shared_ptr<Entry>> index_;
  uint64_t next_seq_ = 0;

  std::mutex log_mu_;
  std::ofstream log_;
  size_t events_since_snapshot_ = 0;

  // Min-heap of (coverage end, post id); stale items are re-checked on pop.
  std::mutex heap_mu_;
  std::priority_queue<std::pair<Seconds, std::string>,
                      std::vector<std::pair<Seconds, std::string>>, std::greater<>>
      expiry_;

  std::mutex updater_mu_;
  std::condition_variable updater_cv_;
  bool updater_stop_ = false;
  std::thread updater_;
};

}  // namespace lethe

#endif  // LETHE_STORE_H_
