#include "lethe/schedule.h"

#include <algorithm>
#include <fstream>
#include <stdexcept>
#include <string>

namespace lethe {

Schedule Schedule::Generate(const DurationDistribution& up, const DurationDistribution& down,
                            Seconds created_at, Seconds horizon, RandomStream rng) {
  if (horizon < 1) throw std::invalid_argument("schedule horizon must be at least 1 second");
  Schedule s;
  s.created_at_ = created_at;
  s.covered_until_ = created_at;
  s.rng_ = rng;
  s.pending_toggle_ = created_at + up.Sample(s.rng_);
  s.Advance(up, down, created_at + horizon);
  return s;
}

Schedule Schedule::Extended(const DurationDistribution& up, const DurationDistribution& down,
                            Seconds until) const {
  if (until <= covered_until_) {
    throw std::invalid_argument("extension must move coverage forward");
  }
  Schedule s = *this;
  s.Advance(up, down, until);
  return s;
}

void Schedule::Advance(const DurationDistribution& up, const DurationDistribution& down,
                       Seconds until) {
  while (pending_toggle_ <= until) {
    toggles_.push_back(pending_toggle_);
    // After an odd number of toggles the post is down.
    const auto& next = toggles_.size() % 2 == 1 ? down : up;
    pending_toggle_ += next.Sample(rng_);
  }
  covered_until_ = until;
}

void Schedule::CheckCovered(Seconds t) const {
  if (t < created_at_ || t > covered_until_) {
    throw std::out_of_range("time " + std::to_string(t) + " outside schedule coverage [" +
                            std::to_string(created_at_) + ", " +
                            std::to_string(covered_until_) + "]");
  }
}

size_t Schedule::TogglesThrough(Seconds t) const {
  return static_cast<size_t>(std::upper_bound(toggles_.begin(), toggles_.end(), t) -
                             toggles_.begin());
}

bool Schedule::UpAt(Seconds t) const {
  CheckCovered(t);
  return TogglesThrough(t) % 2 == 0;
}

Seconds Schedule::PhaseStart(Seconds t) const {
  CheckCovered(t);
  const size_t i = TogglesThrough(t);
  return i == 0 ? created_at_ : toggles_[i - 1];
}

void Schedule::WriteCsv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "toggle_index,timestamp_seconds\n";
  for (size_t i = 0; i < toggles_.size(); ++i) out << i << ',' << toggles_[i] << '\n';
}

bool Observable(const PostRecord& post, Seconds t) {
  if (!post.RealState(t)) return false;
  return post.schedule.UpAt(t);
}

std::optional<ObservationSummary> SummarizeObservation(const PostRecord& post, Seconds t_c) {
  if (Observable(post, t_c)) return std::nullopt;
  const Schedule& s = post.schedule;
  const auto& toggles = s.toggles();

  size_t i;
  if (post.deleted_at && t_c >= *post.deleted_at) {
    const Seconds t_del = *post.deleted_at;
    i = s.TogglesThrough(t_del);
    if (i % 2 == 0 && s.PhaseStart(t_del) < t_del) {
      // Deleted mid up phase: the up phase is cut short.
      return ObservationSummary{t_del - s.PhaseStart(t_del), t_c - t_del, t_c};
    }
    if (i == 0) return ObservationSummary{0, t_c - t_del, t_c};
    // Deleted while down, or exactly as an up phase began: the down phase
    // that was already running simply never ends.
    if (i % 2 == 0) --i;
  } else {
    i = s.TogglesThrough(t_c);
  }
  const Seconds down_start = toggles[i - 1];
  const Seconds up_start = i >= 2 ? toggles[i - 2] : s.created_at();
  return ObservationSummary{down_start - up_start, t_c - down_start, t_c};
}

size_t DownPeriodCountExceeding(const Schedule& s, Seconds theta, Seconds t_a, Seconds t_b) {
  if (t_a > t_b) throw std::invalid_argument("window start after window end");
  if (t_b > s.covered_until()) throw std::out_of_range("window beyond schedule coverage");
  const auto& toggles = s.toggles();
  size_t count = 0;
  // Down phases start at even toggle indices and end at the following one.
  for (size_t i = 0; i + 1 < toggles.size(); i += 2) {
    if (toggles[i] < t_a) continue;
    if (toggles[i] > t_b) break;
    if (toggles[i + 1] - toggles[i] >= theta) ++count;
  }
  return count;
}

}  // namespace lethe
