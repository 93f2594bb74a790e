#include "lethe/store.h"

#include <algorithm>
#include <cstdio>

#include "json.hpp"

namespace lethe {
namespace {

using nlohmann::json;

constexpr const char* kSnapshotFile = "snapshot.json";
constexpr const char* kLogFile = "events.log";

// Token comparison whose running time does not depend on where the
// strings first differ.
bool SameToken(const std::string& a, const std::string& b) {
  unsigned char diff = a.size() == b.size() ? 0 : 1;
  const size_t n = std::max(a.size(), b.size());
  for (size_t i = 0; i < n; ++i) {
    const unsigned char x = i < a.size() ? static_cast<unsigned char>(a[i]) : 0;
    const unsigned char y = i < b.size() ? static_cast<unsigned char>(b[i]) : 0;
    diff |= static_cast<unsigned char>(x ^ y);
  }
  return diff == 0;
}

}  // namespace

Seconds SystemClock::Now() const {
  const Seconds wall = std::chrono::duration_cast<std::chrono::seconds>(
                           std::chrono::system_clock::now().time_since_epoch())
                           .count();
  Seconds prev = last_.load();
  while (wall > prev && !last_.compare_exchange_weak(prev, wall)) {
  }
  return std::max(wall, prev);
}

Store::Store(StoreOptions options, std::shared_ptr<const Clock> clock)
    : options_(std::move(options)), clock_(std::move(clock)) {
  if (!clock_) throw std::invalid_argument("store needs a clock");
  if (options_.coverage < 1) throw std::invalid_argument("coverage must be positive");
  if (options_.data_dir) {
    std::filesystem::create_directories(*options_.data_dir);
    Recover();
    log_.open(*options_.data_dir / kLogFile, std::ios::app);
    if (!log_) throw StorageError("cannot open event log in " + options_.data_dir->string());
  }
}

Store::~Store() { StopUpdater(); }

std::string Store::IdFor(uint64_t seq) const {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "p%016llx",
                static_cast<unsigned long long>(SplitMix64(options_.seed ^ SplitMix64(seq))));
  return buf;
}

Schedule Store::NewSchedule(uint64_t seq, Seconds created_at, Seconds until) const {
  return Schedule::Generate(options_.mechanism.up, options_.mechanism.down, created_at,
                            std::max<Seconds>(1, until - created_at),
                            RandomStream::Derive(options_.seed, {kScheduleStream, seq}));
}

std::shared_ptr<Store::Entry> Store::Find(const std::string& post_id) const {
  std::shared_lock lock(index_mu_);
  const auto it = index_.find(post_id);
  return it == index_.end() ? nullptr : it->second;
}

void Store::AppendEvent(const std::string& line) {
  if (!options_.data_dir) return;
  std::lock_guard lock(log_mu_);
  log_ << line << '\n';
  log_.flush();
  if (!log_) throw StorageError("failed to append to the event log");
  ++events_since_snapshot_;
}

void Store::Track(Seconds covered_until, const std::string& post_id) {
  std::lock_guard lock(heap_mu_);
  expiry_.emplace(covered_until, post_id);
}

std::string Store::Put(const std::string& content, const std::string& token) {
  if (content.empty()) throw std::invalid_argument("content must not be empty");
  if (token.empty()) throw std::invalid_argument("token must not be empty");
  const Seconds now = clock_->Now();
  auto entry = std::make_shared<Entry>();
  std::string id;
  Seconds covered;
  {
    std::unique_lock lock(index_mu_);
    const uint64_t seq = next_seq_;
    id = IdFor(seq);
    entry->seq = seq;
    entry->record = {id, token, content, NewSchedule(seq, now, now + options_.coverage),
                     std::nullopt};
    covered = entry->record.schedule.covered_until();
    AppendEvent(json{{"e", "put"}, {"seq", seq}, {"id", id}, {"token", token},
                     {"content", content}, {"at", now}}
                    .dump());
    ++next_seq_;
    index_.emplace(id, entry);
  }
  Track(covered, id);
  MaybeSnapshot();
  return id;
}

void Store::EnsureCovered(Entry& entry, Seconds until, bool log) {
  PostRecord& r = entry.record;
  if (r.deleted_at || r.schedule.covered_until() >= until) return;
  r.schedule =
      r.schedule.Extended(options_.mechanism.up, options_.mechanism.down, until);
  if (log) AppendEvent(json{{"e", "ext"}, {"id", r.post_id}, {"until", until}}.dump());
}

std::optional<std::string> Store::Get(const std::string& post_id, const std::string& token) {
  const auto entry = Find(post_id);
  if (!entry) return std::nullopt;
  const Seconds now = clock_->Now();
  std::lock_guard lock(entry->mu);
  PostRecord& r = entry->record;
  if (r.deleted_at) return std::nullopt;
  if (SameToken(r.owner_token, token)) return r.content;
  const Seconds t = std::max(now, r.schedule.created_at());
  if (t > r.schedule.covered_until()) {
    EnsureCovered(*entry, t + options_.coverage, true);
    Track(r.schedule.covered_until(), r.post_id);
  }
  if (Observable(r, t)) return r.content;
  return std::nullopt;
}

bool Store::Delete(const std::string& post_id, const std::string& token) {
  const auto entry = Find(post_id);
  if (!entry) return false;
  const Seconds now = clock_->Now();
  {
    std::lock_guard lock(entry->mu);
    PostRecord& r = entry->record;
    if (r.deleted_at || !SameToken(r.owner_token, token)) return false;
    AppendEvent(json{{"e", "del"}, {"id", post_id}, {"at", now}}.dump());
    r.deleted_at = now;
    r.content.clear();
    r.content.shrink_to_fit();
    r.schedule = Schedule();
  }
  MaybeSnapshot();
  return true;
}

UpdateResult Store::UpdateTs(const std::vector<std::string>& post_ids) {
  UpdateResult result;
  const Seconds target = clock_->Now() + options_.coverage;
  for (const auto& id : post_ids) {
    const auto entry = Find(id);
    if (!entry) {
      ++result.skipped;
      continue;
    }
    std::lock_guard lock(entry->mu);
    if (entry->record.deleted_at) {
      ++result.skipped;
      continue;
    }
    if (entry->record.schedule.covered_until() < target) {
      EnsureCovered(*entry, target + ExtensionSlack(), true);
      Track(entry->record.schedule.covered_until(), id);
      ++result.extended;
    }
  }
  MaybeSnapshot();
  return result;
}

size_t Store::RunUpdaterPass() {
  const Seconds target = clock_->Now() + options_.coverage;
  std::vector<std::string> due;
  {
    std::lock_guard lock(heap_mu_);
    while (!expiry_.empty() && expiry_.top().first < target) {
      due.push_back(expiry_.top().second);
      expiry_.pop();
    }
  }
  size_t extended = 0;
  for (const auto& id : due) {
    const auto entry = Find(id);
    if (!entry) continue;
    std::lock_guard lock(entry->mu);
    // Deleted posts leave the active set.
    if (entry->record.deleted_at) continue;
    if (entry->record.schedule.covered_until() < target) {
      EnsureCovered(*entry, target + ExtensionSlack(), true);
      ++extended;
    }
    Track(entry->record.schedule.covered_until(), id);
  }
  MaybeSnapshot();
  return extended;
}

void Store::StartUpdater(std::chrono::milliseconds period) {
  StopUpdater();
  {
    std::lock_guard lock(updater_mu_);
    updater_stop_ = false;
  }
  updater_ = std::thread([this, period] {
    std::unique_lock lock(updater_mu_);
    while (!updater_cv_.wait_for(lock, period, [this] { return updater_stop_; })) {
      lock.unlock();
      try {
        RunUpdaterPass();
      } catch (const std::exception&) {
        // Retried on the next period.
      }
      lock.lock();
    }
  });
}

void Store::StopUpdater() {
  {
    std::lock_guard lock(updater_mu_);
    updater_stop_ = true;
  }
  updater_cv_.notify_all();
  if (updater_.joinable()) updater_.join();
}

std::optional<Schedule> Store::ScheduleOf(const std::string& post_id) const {
  const auto entry = Find(post_id);
  if (!entry) return std::nullopt;
  std::lock_guard lock(entry->mu);
  if (entry->record.deleted_at) return std::nullopt;
  return entry->record.schedule;
}

bool Store::IsTombstone(const std::string& post_id) const {
  const auto entry = Find(post_id);
  if (!entry) return false;
  std::lock_guard lock(entry->mu);
  return entry->record.deleted_at.has_value() && entry->record.content.empty();
}

size_t Store::size() const {
  std::shared_lock lock(index_mu_);
  return index_.size();
}

void Store::MaybeSnapshot() {
  if (!options_.data_dir) return;
  {
    std::lock_guard lock(log_mu_);
    if (events_since_snapshot_ < options_.snapshot_every) return;
  }
  Snapshot();
}

void Store::Snapshot() {
  if (!options_.data_dir) return;
  // Lock order everywhere: index, entry, log.
  std::shared_lock index_lock(index_mu_);
  std::vector<std::unique_lock<std::mutex>> entry_locks;
  entry_locks.reserve(index_.size());
  for (auto& [id, entry] : index_) entry_locks.emplace_back(entry->mu);
  std::lock_guard log_lock(log_mu_);

  json posts = json::array();
  for (const auto& [id, entry] : index_) {
    const PostRecord& r = entry->record;
    json p{{"id", r.post_id}, {"seq", entry->seq}, {"token", r.owner_token}};
    if (r.deleted_at) {
      p["deleted_at"] = *r.deleted_at;
    } else {
      p["content"] = r.content;
      p["created_at"] = r.schedule.created_at();
      p["covered_until"] = r.schedule.covered_until();
    }
    posts.push_back(std::move(p));
  }
  const json snapshot{{"next_seq", next_seq_}, {"posts", std::move(posts)}};

  const auto dir = *options_.data_dir;
  const auto tmp = dir / "snapshot.json.tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << snapshot.dump() << '\n';
    out.flush();
    if (!out) throw StorageError("failed to write snapshot");
  }
  std::filesystem::rename(tmp, dir / kSnapshotFile);
  // Replaying events already folded into the snapshot is harmless, so a
  // crash between the rename and the truncation loses nothing.
  log_.close();
  log_.open(dir / kLogFile, std::ios::trunc);
  if (!log_) throw StorageError("cannot reopen event log");
  events_since_snapshot_ = 0;
}

void Store::Recover() {
  const auto dir = *options_.data_dir;
  auto install = [this](uint64_t seq, const std::string& id, const std::string& token,
                        const std::string& content, Seconds created, Seconds covered) {
    if (index_.count(id)) return;
    auto entry = std::make_shared<Entry>();
    entry->seq = seq;
    entry->record = {id, token, content, NewSchedule(seq, created, covered), std::nullopt};
    index_.emplace(id, entry);
    next_seq_ = std::max(next_seq_, seq + 1);
    expiry_.emplace(entry->record.schedule.covered_until(), id);
  };

  if (std::ifstream in(dir / kSnapshotFile); in) {
    const json snap = json::parse(in);
    next_seq_ = snap.at("next_seq").get<uint64_t>();
    for (const auto& p : snap.at("posts")) {
      const auto id = p.at("id").get<std::string>();
      const auto seq = p.at("seq").get<uint64_t>();
      if (p.contains("deleted_at")) {
        auto entry = std::make_shared<Entry>();
        entry->seq = seq;
        entry->record.post_id = id;
        entry->record.owner_token = p.at("token").get<std::string>();
        entry->record.deleted_at = p.at("deleted_at").get<Seconds>();
        index_.emplace(id, entry);
      } else {
        install(seq, id, p.at("token").get<std::string>(), p.at("content").get<std::string>(),
                p.at("created_at").get<Seconds>(), p.at("covered_until").get<Seconds>());
      }
    }
  }

  std::ifstream in(dir / kLogFile);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json ev;
    try {
      ev = json::parse(line);
    } catch (const json::parse_error&) {
      break;  // torn final write
    }
    const auto kind = ev.at("e").get<std::string>();
    const auto id = ev.at("id").get<std::string>();
    if (kind == "put") {
      const auto at = ev.at("at").get<Seconds>();
      install(ev.at("seq").get<uint64_t>(), id, ev.at("token").get<std::string>(),
              ev.at("content").get<std::string>(), at, at + options_.coverage);
    } else if (kind == "ext") {
      const auto it = index_.find(id);
      if (it != index_.end()) EnsureCovered(*it->second, ev.at("until").get<Seconds>(), false);
    } else if (kind == "del") {
      const auto it = index_.find(id);
      if (it == index_.end() || it->second->record.deleted_at) continue;
      PostRecord& r = it->second->record;
      r.deleted_at = ev.at("at").get<Seconds>();
      r.content.clear();
      r.schedule = Schedule();
    }
    ++events_since_snapshot_;
  }
}

}  // namespace lethe
