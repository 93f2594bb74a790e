#include "lethe/store.h"

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <random>
#include <thread>

#include <gtest/gtest.h>

namespace lethe {
namespace {

namespace fs = std::filesystem;

constexpr Seconds kDay = kSecondsPerDay;
constexpr Seconds kStart = 1'700'000'000;

StoreOptions Options(uint64_t seed = 5) {
  StoreOptions o{BuildMechanism({0.9, 3600.0, 30 * kDay}), seed, kDefaultCoverage, std::nullopt};
  return o;
}

// First instant >= from at which the schedule hides the post.
Seconds FirstHidden(const Schedule& s, Seconds from) {
  for (size_t i = 0; i < s.toggles().size(); i += 2) {
    if (s.toggles()[i] >= from && (i + 1 >= s.toggles().size() || s.toggles()[i + 1] > s.toggles()[i])) {
      return s.toggles()[i];
    }
  }
  ADD_FAILURE() << "no down phase";
  return from;
}

class StoreTest : public ::testing::Test {
 protected:
  std::shared_ptr<ManualClock> clock_ = std::make_shared<ManualClock>(kStart);
};

TEST_F(StoreTest, PutIsImmediatelyVisible) {
  Store store(Options(), clock_);
  const auto a = store.Put("hello", "owner");
  const auto b = store.Put("again", "owner");
  EXPECT_NE(a, b);
  EXPECT_EQ(store.Get(a, "stranger"), "hello");
  EXPECT_EQ(store.Get(b, ""), "again");
  EXPECT_EQ(store.size(), 2u);
  EXPECT_THROW(store.Put("", "owner"), std::invalid_argument);
  EXPECT_THROW(store.Put("x", ""), std::invalid_argument);
}

TEST_F(StoreTest, SchedulesAndIdsReproduceUnderSeed) {
  Store s1(Options(9), clock_), s2(Options(9), clock_), s3(Options(10), clock_);
  const auto a = s1.Put("x", "t"), b = s2.Put("x", "t"), c = s3.Put("x", "t");
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  EXPECT_EQ(*s1.ScheduleOf(a), *s2.ScheduleOf(b));
  EXPECT_EQ(s1.ScheduleOf(a)->created_at(), kStart);
  EXPECT_GE(s1.ScheduleOf(a)->covered_until(), kStart + kDefaultCoverage);
}

TEST_F(StoreTest, OwnerBypassesDownPhase) {
  Store store(Options(), clock_);
  const auto id = store.Put("secret", "owner");
  const Seconds hidden = FirstHidden(*store.ScheduleOf(id), kStart);
  clock_->Set(hidden);
  EXPECT_EQ(store.Get(id, "stranger"), std::nullopt);
  EXPECT_EQ(store.Get(id, "owner"), "secret");
  EXPECT_EQ(store.Get(id, "owner "), std::nullopt);  // near-miss tokens are strangers
  clock_->Set(hidden - 1);
  EXPECT_EQ(store.Get(id, "stranger"), "secret");
}

TEST_F(StoreTest, DeleteIsPermanent) {
  Store store(Options(), clock_);
  const auto id = store.Put("gone soon", "owner");
  EXPECT_FALSE(store.Delete(id, "thief"));
  EXPECT_EQ(store.Get(id, "stranger"), "gone soon");
  EXPECT_TRUE(store.Delete(id, "owner"));
  EXPECT_FALSE(store.Delete(id, "owner"));
  EXPECT_FALSE(store.Delete("p0000000000000000", "owner"));
  EXPECT_TRUE(store.IsTombstone(id));
  EXPECT_FALSE(store.ScheduleOf(id).has_value());
  for (Seconds dt : {Seconds{0}, Seconds{1}, kDay, 400 * kDay}) {
    clock_->Set(kStart + dt);
    EXPECT_EQ(store.Get(id, "owner"), std::nullopt);
    EXPECT_EQ(store.Get(id, "stranger"), std::nullopt);
  }
}

TEST_F(StoreTest, UpdateTsExtendsOnlyWhenDue) {
  Store store(Options(), clock_);
  const auto id = store.Put("x", "o");
  const auto dead = store.Put("y", "o");
  store.Delete(dead, "o");
  auto r = store.UpdateTs({id});
  EXPECT_EQ(r.extended, 0u);
  const Schedule before = *store.ScheduleOf(id);

  clock_->Advance(182 * kDay);
  r = store.UpdateTs({id, dead, "nope"});
  EXPECT_EQ(r.extended, 1u);
  EXPECT_EQ(r.skipped, 2u);
  const Schedule after = *store.ScheduleOf(id);
  EXPECT_GE(after.covered_until(), clock_->Now() + kDefaultCoverage);
  for (size_t i = 0; i < before.toggles().size(); ++i) ASSERT_EQ(after.toggles()[i], before.toggles()[i]);
  for (Seconds t = kStart; t <= before.covered_until(); t += 3607) ASSERT_EQ(after.UpAt(t), before.UpAt(t));
}

TEST_F(StoreTest, LazyExtensionOnRead) {
  Store store(Options(), clock_);
  const auto id = store.Put("x", "o");
  const Schedule before = *store.ScheduleOf(id);
  clock_->Set(before.covered_until() + 10 * kDay);
  store.Get(id, "stranger");
  const Schedule after = *store.ScheduleOf(id);
  EXPECT_GE(after.covered_until(), clock_->Now());
  for (size_t i = 0; i < before.toggles().size(); ++i) ASSERT_EQ(after.toggles()[i], before.toggles()[i]);
  // Same answers as a store that never needed extending.
  StoreOptions wide = Options();
  wide.coverage = 3 * kDefaultCoverage;
  Store reference(wide, std::make_shared<ManualClock>(kStart));
  reference.Put("x", "o");
  const Schedule ref = *reference.ScheduleOf(id);
  for (Seconds t = kStart; t <= after.covered_until(); t += 7919) ASSERT_EQ(after.UpAt(t), ref.UpAt(t));
}

TEST_F(StoreTest, UpdaterPassCoversEveryLivePost) {
  Store store(Options(), clock_);
  std::vector<std::string> ids;
  for (int i = 0; i < 50; ++i) {
    ids.push_back(store.Put("c" + std::to_string(i), "o"));
    clock_->Advance(kDay);
  }
  store.Delete(ids[3], "o");
  clock_->Advance(300 * kDay);
  EXPECT_GT(store.RunUpdaterPass(), 0u);
  for (const auto& id : ids) {
    if (id == ids[3]) continue;
    EXPECT_GE(store.ScheduleOf(id)->covered_until(), clock_->Now() + kDefaultCoverage);
  }
  EXPECT_EQ(store.RunUpdaterPass(), 0u);
  clock_->Advance(3600);
  EXPECT_EQ(store.RunUpdaterPass(), 0u);  // slack absorbs hourly passes
}

TEST_F(StoreTest, BackgroundUpdaterRuns) {
  Store store(Options(), clock_);
  const auto id = store.Put("x", "o");
  clock_->Advance(200 * kDay);
  store.StartUpdater(std::chrono::milliseconds(5));
  for (int i = 0; i < 400 && store.ScheduleOf(id)->covered_until() < clock_->Now() + kDefaultCoverage; ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  store.StopUpdater();
  EXPECT_GE(store.ScheduleOf(id)->covered_until(), clock_->Now() + kDefaultCoverage);
}

class PersistentStoreTest : public StoreTest {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("lethe_store_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  StoreOptions PersistentOptions(size_t snapshot_every) {
    auto o = Options();
    o.data_dir = dir_;
    o.snapshot_every = snapshot_every;
    return o;
  }
  fs::path dir_;
};

TEST_F(PersistentStoreTest, RecoversFromLogAndSnapshot) {
  for (size_t every : {size_t{1000000}, size_t{3}}) {
    fs::remove_all(dir_);
    std::vector<std::string> ids;
    std::vector<Schedule> schedules;
    {
      Store store(PersistentOptions(every), clock_);
      for (int i = 0; i < 10; ++i) ids.push_back(store.Put("body" + std::to_string(i), "tok" + std::to_string(i)));
      store.Delete(ids[2], "tok2");
      clock_->Advance(250 * kDay);
      store.UpdateTs({ids[0], ids[5]});
      for (const auto& id : ids) schedules.push_back(store.ScheduleOf(id).value_or(Schedule()));
    }
    Store reopened(PersistentOptions(every), clock_);
    EXPECT_EQ(reopened.size(), 10u);
    for (size_t i = 0; i < ids.size(); ++i) {
      if (i == 2) {
        EXPECT_TRUE(reopened.IsTombstone(ids[i]));
        EXPECT_EQ(reopened.Get(ids[i], "tok2"), std::nullopt);
        continue;
      }
      EXPECT_EQ(reopened.ScheduleOf(ids[i]), schedules[i]) << "every=" << every << " i=" << i;
      EXPECT_EQ(reopened.Get(ids[i], "tok" + std::to_string(i)), "body" + std::to_string(i));
    }
    // Ids keep counting from where they stopped.
    const auto next = reopened.Put("new", "t");
    EXPECT_EQ(std::count(ids.begin(), ids.end(), next), 0);
  }
}

TEST_F(PersistentStoreTest, TornTailIsIgnored) {
  std::string id;
  {
    Store store(PersistentOptions(1000000), clock_);
    id = store.Put("kept", "o");
  }
  std::ofstream(dir_ / "events.log", std::ios::app) << "{\"e\":\"del\",\"id\":";
  Store reopened(PersistentOptions(1000000), clock_);
  EXPECT_EQ(reopened.Get(id, "o"), "kept");
}

TEST_F(PersistentStoreTest, ExplicitSnapshotCompactsLog) {
  Store store(PersistentOptions(1000000), clock_);
  for (int i = 0; i < 5; ++i) store.Put("x", "o");
  store.Snapshot();
  EXPECT_EQ(fs::file_size(dir_ / "events.log"), 0u);
  EXPECT_TRUE(fs::exists(dir_ / "snapshot.json"));
}

// Per-post linearizability: every get is consistent with some point inside
// its real-time interval relative to the delete of that post.
TEST_F(StoreTest, ConcurrentWorkloadIsLinearizable) {
  using Clock = std::chrono::steady_clock;
  Store store(Options(), clock_);
  constexpr int kPosts = 64;
  std::vector<std::string> ids;
  for (int i = 0; i < kPosts; ++i) ids.push_back(store.Put("content-" + std::to_string(i), "own" + std::to_string(i)));
  struct DeleteSpan {
    Clock::time_point start, end;
    bool ok = false;
  };
  std::vector<DeleteSpan> deletes(kPosts);
  struct GetRecord {
    int post;
    Clock::time_point start, end;
    std::optional<std::string> result;
  };
  constexpr int kThreads = 4, kOpsPerThread = 2500;
  std::vector<std::vector<GetRecord>> gets(kThreads);
  std::vector<std::atomic<int>> delete_claim(kPosts);
  std::atomic<int> deleted_ok{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < kThreads; ++t) {
    pool.emplace_back([&, t] {
      std::mt19937 rng(1000 + t);
      for (int op = 0; op < kOpsPerThread; ++op) {
        const int post = static_cast<int>(rng() % kPosts);
        if (rng() % 10 == 0 && delete_claim[post].fetch_add(1) == 0) {
          DeleteSpan span;
          span.start = Clock::now();
          span.ok = store.Delete(ids[post], "own" + std::to_string(post));
          span.end = Clock::now();
          deletes[post] = span;
          deleted_ok += span.ok;
          continue;
        }
        GetRecord rec{post, Clock::now(), {}, {}};
        rec.result = store.Get(ids[post], "own" + std::to_string(post));
        rec.end = Clock::now();
        gets[t].push_back(std::move(rec));
      }
    });
  }
  for (auto& th : pool) th.join();

  size_t checked = 0;
  for (const auto& per_thread : gets) {
    for (const auto& g : per_thread) {
      const auto& d = deletes[g.post];
      const std::string content = "content-" + std::to_string(g.post);
      ASSERT_TRUE(!g.result || *g.result == content);
      if (d.ok && g.start > d.end) ASSERT_FALSE(g.result.has_value());
      if (!d.ok || g.end < d.start) ASSERT_EQ(g.result, content);
      ++checked;
    }
  }
  EXPECT_EQ(checked + static_cast<size_t>(deleted_ok.load()), static_cast<size_t>(kThreads * kOpsPerThread));
  EXPECT_GT(deleted_ok.load(), 0);
  for (int i = 0; i < kPosts; ++i) {
    if (deletes[i].ok) EXPECT_TRUE(store.IsTombstone(ids[i]));
  }
}

}  // namespace
}  // namespace lethe
