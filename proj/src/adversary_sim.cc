#include "lethe/adversary_sim.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

#include "lethe/parallel.h"
#include "lethe/random.h"
#include "lethe/schedule.h"

namespace lethe {
namespace {

constexpr Seconds kNever = std::numeric_limits<Seconds>::max() / 4;
constexpr size_t kChunkPosts = 1 << 16;
// Long-phase marks with relative weight below this are dropped.
constexpr double kMarkCutoff = 1e-12;

// Flags raised against a single post, fed in chronological order.
class PostTally {
 public:
  PostTally(Seconds horizon, Seconds death, Seconds theta)
      : horizon_(horizon), death_(death), theta_(theta) {}

  // Flag on a post that is still live at time t.
  void FalseFlag(Seconds t) {
    if (t > horizon_) return;
    ++fp_multi_;
    if (!flagged_) {
      flagged_ = true;
      fp_once_ = true;
    }
  }

  // Flag on a post already deleted at time t.
  void TrueFlag(Seconds t) {
    if (t > horizon_) return;
    tp_multi_ = true;
    if (!flagged_) {
      flagged_ = true;
      tp_once_ = true;
    }
  }

  void AddTo(ScenarioCounts& once, ScenarioCounts& multi) const {
    multi.fp += fp_multi_;
    multi.fp_sq_sum += static_cast<double>(fp_multi_) * static_cast<double>(fp_multi_);
    multi.tp += tp_multi_;
    once.fp += fp_once_;
    once.fp_sq_sum += fp_once_;
    once.tp += tp_once_;
    // A deletion after a false flag is missed; only count deletions whose
    // flagging window closes inside the horizon, like true positives.
    if (fp_once_ && death_ != kNever && death_ + theta_ <= horizon_) ++once.fn;
  }

 private:
  Seconds horizon_;
  Seconds death_;
  Seconds theta_;
  int64_t fp_multi_ = 0;
  bool tp_multi_ = false;
  bool flagged_ = false;
  bool fp_once_ = false;
  bool tp_once_ = false;
};

// Flags for a down phase starting at s that is still running when the post
// is deleted at `death`: false flags while live, then one true flag.
void TerminalPhase(PostTally& tally, Seconds s, Seconds death, Seconds theta) {
  Seconds flag = s + theta;
  for (; flag < death; flag += theta) tally.FalseFlag(flag);
  tally.TrueFlag(flag);
}

Seconds BirthOf(const SimulationConfig& cfg, int64_t post) {
  if (post < cfg.initial_posts) return 0;
  return (1 + (post - cfg.initial_posts) / cfg.creations_per_day) * kSecondsPerDay;
}

struct ChunkResult {
  ScenarioCounts once;
  ScenarioCounts multi;
};

ThresholdOutcome Reduce(const std::vector<ChunkResult>& chunks, Seconds theta, double shape) {
  ThresholdOutcome out;
  out.theta = theta;
  out.shape = shape;
  for (const auto& c : chunks) {
    for (auto [dst, src] : {std::pair{&out.once, &c.once}, std::pair{&out.multi, &c.multi}}) {
      dst->tp += src->tp;
      dst->fp += src->fp;
      dst->fn += src->fn;
      dst->fp_sq_sum += src->fp_sq_sum;
    }
  }
  return out;
}

// Deletion times from the sequential uniform-victim process.
std::vector<Seconds> ExactDeathTimes(const SimulationConfig& cfg) {
  const int64_t total = cfg.total_posts();
  std::vector<Seconds> death(static_cast<size_t>(total), kNever);
  std::vector<int64_t> alive;
  alive.reserve(static_cast<size_t>(total));
  for (int64_t i = 0; i < cfg.initial_posts; ++i) alive.push_back(i);
  RandomStream rng = RandomStream::Derive(cfg.seed, {kDeletionStream});
  int64_t next_post = cfg.initial_posts;
  for (int64_t day = 1; day < cfg.horizon_days; ++day) {
    for (int64_t k = 0; k < cfg.deletions_per_day; ++k) {
      const size_t j = std::uniform_int_distribution<size_t>(0, alive.size() - 1)(rng);
      death[static_cast<size_t>(alive[j])] = day * kSecondsPerDay;
      alive[j] = alive.back();
      alive.pop_back();
    }
    for (int64_t k = 0; k < cfg.creations_per_day; ++k) alive.push_back(next_post++);
  }
  return death;
}

ThresholdOutcome RunExact(const SimulationConfig& cfg, const Mechanism& mech, Seconds theta) {
  const std::vector<Seconds> death = ExactDeathTimes(cfg);
  const Seconds horizon = cfg.horizon();
  const size_t total = death.size();
  const size_t n_chunks = (total + kChunkPosts - 1) / kChunkPosts;
  std::vector<ChunkResult> results(n_chunks);

  ForEachChunk(n_chunks, cfg.threads, [&](size_t chunk) {
    ChunkResult& r = results[chunk];
    const size_t end = std::min(total, (chunk + 1) * kChunkPosts);
    for (size_t i = chunk * kChunkPosts; i < end; ++i) {
      const Seconds d = death[i];
      PostTally tally(horizon, d, theta);
      RandomStream rng = RandomStream::Derive(cfg.seed, {kScheduleStream, i});
      Seconds t = BirthOf(cfg, static_cast<int64_t>(i));
      bool terminal = false;
      while (t <= horizon) {
        const Seconds s = t + mech.up.Sample(rng);
        if (d < s) {
          // Deleted during the up phase: the post goes down at d for good.
          tally.TrueFlag(d + theta);
          terminal = true;
          break;
        }
        if (s > horizon) break;
        const Seconds length = mech.down.Sample(rng);
        if (d <= s + length) {
          TerminalPhase(tally, s, d, theta);
          terminal = true;
          break;
        }
        for (Seconds k = theta; k <= length; k += theta) tally.FalseFlag(s + k);
        t = s + length;
      }
      if (!terminal && d != kNever) tally.TrueFlag(d + theta);
      tally.AddTo(r.once, r.multi);
    }
  });
  return Reduce(results, theta, *mech.down.shape());
}

// Cumulative deletion hazard: a post alive at the start of day j survives
// that day's deletions with probability 1 - D / A_j.
std::vector<double> CumulativeHazard(const SimulationConfig& cfg) {
  std::vector<double> h(static_cast<size_t>(cfg.horizon_days), 0.0);
  const double deletions = static_cast<double>(cfg.deletions_per_day);
  for (int64_t day = 1; day < cfg.horizon_days; ++day) {
    const double alive = static_cast<double>(cfg.initial_posts) +
                         static_cast<double>(cfg.creations_per_day - cfg.deletions_per_day) *
                             static_cast<double>(day - 1);
    h[static_cast<size_t>(day)] = h[static_cast<size_t>(day - 1)] - std::log1p(-deletions / alive);
  }
  return h;
}

// Sum of CCDF(j) for j in [0, last]. Exact for small j, then trapezoid
// steps on a 1% geometric grid; the CCDF is smooth and monotone there.
double CcdfSum(const DurationDistribution& d, Seconds last) {
  double sum = 0.0;
  Seconds j = 0;
  for (; j < 4096 && j <= last; ++j) sum += d.Ccdf(j);
  Seconds prev = j - 1;
  double f_prev = d.Ccdf(prev);
  while (prev < last) {
    const Seconds next =
        std::min(last, std::max(prev + 1, static_cast<Seconds>(std::ceil(prev * 1.01))));
    const double f = d.Ccdf(next);
    sum += 0.5 * (f + f_prev) * static_cast<double>(next - prev) - 0.5 * (f_prev - f);
    prev = next;
    f_prev = f;
  }
  return sum;
}

// Renewal view of one post's schedule as seen by a threshold-theta
// adversary: "free" stretches of up phases and short down phases alternate
// with long down phases (length >= theta).
//
// A free stretch is a geometric number of short cycles plus the final up
// phase. With geometric up times its length is close to exponential with
// mean mu_up / p + (1 - p) / p * E[D | D < theta], p = CCDF(theta - 1).
// Long phase lengths follow D | D >= theta, tabulated on bins of theta / 16
// and uniform inside a bin.
class LongPhaseModel {
 public:
  LongPhaseModel(const Mechanism& mech, Seconds theta, Seconds horizon) : theta_(theta) {
    const DurationDistribution& down = mech.down;
    const double log_p = down.LogCcdf(theta - 1);
    const double p = std::exp(log_p);
    const double short_mass = CcdfSum(down, theta - 2) - static_cast<double>(theta - 1) * p;
    const double short_mean = p < 1.0 ? short_mass / (1.0 - p) : 0.0;
    free_mean_ = mech.up.mean() / p + (1.0 - p) / p * short_mean;

    bin_ = theta % 16 == 0 ? theta / 16 : theta;
    tail_.push_back(1.0);
    for (Seconds j = 1;; ++j) {
      const Seconds edge = theta + j * bin_;
      const double w = std::exp(down.LogCcdf(edge - 1) - log_p);
      if (w < kMarkCutoff) {
        tail_.push_back(0.0);
        break;
      }
      tail_.push_back(w);
      if (edge > horizon + theta) break;
    }
    // A non-zero tail_.back() is the mass of lengths past the horizon.
    overflow_length_ = 2 * horizon + theta;
  }

  Seconds theta() const { return theta_; }
  double free_mean() const { return free_mean_; }

  Seconds SampleLength(RandomStream& rng) const {
    const double u = rng.Uniform();
    // Bins whose survival weight exceeds u.
    const auto idx = static_cast<size_t>(
        std::upper_bound(tail_.begin(), tail_.end(), u, std::greater<>()) - tail_.begin());
    if (idx == tail_.size()) return overflow_length_;
    const double lo = static_cast<double>(theta_ + static_cast<Seconds>(idx - 1) * bin_);
    return static_cast<Seconds>(lo + rng.Uniform() * static_cast<double>(bin_));
  }

  // P(L < x) under the tabulated law.
  double Cdf(double x) const {
    const double rel = (x - static_cast<double>(theta_)) / static_cast<double>(bin_);
    if (rel <= 0.0) return 0.0;
    const auto j = static_cast<size_t>(rel);
    if (j + 1 >= tail_.size()) {
      if (x >= static_cast<double>(overflow_length_)) return 1.0;
      // tail_.back() == 0 when the table ended at the cutoff.
      return 1.0 - tail_.back();
    }
    const double frac = rel - static_cast<double>(j);
    return 1.0 - (tail_[j] - frac * (tail_[j] - tail_[j + 1]));
  }

 private:
  Seconds theta_;
  Seconds bin_ = 1;
  double free_mean_ = 0.0;
  std::vector<double> tail_;  // tail_[j] = P(L >= theta + j * bin_)
  Seconds overflow_length_ = 0;
};

ThresholdOutcome RunAccelerated(const SimulationConfig& cfg, const Mechanism& mech,
                                Seconds theta) {
  const Seconds horizon = cfg.horizon();
  const std::vector<double> hazard = CumulativeHazard(cfg);
  const LongPhaseModel model(mech, theta, horizon);
  const double free_mean = model.free_mean();

  const auto total = static_cast<size_t>(cfg.total_posts());
  const size_t n_chunks = (total + kChunkPosts - 1) / kChunkPosts;
  std::vector<ChunkResult> results(n_chunks);

  ForEachChunk(n_chunks, cfg.threads, [&](size_t chunk) {
    ChunkResult& r = results[chunk];
    RandomStream rng = RandomStream::Derive(cfg.seed, {kScheduleStream, 0xACCE1ULL, chunk});
    const size_t end = std::min(total, (chunk + 1) * kChunkPosts);
    for (size_t i = chunk * kChunkPosts; i < end; ++i) {
      const Seconds birth = BirthOf(cfg, static_cast<int64_t>(i));
      const auto birth_day = static_cast<size_t>(birth / kSecondsPerDay);

      Seconds death = kNever;
      const double target = hazard[birth_day] - std::log(rng.UniformPositive());
      const auto it = std::lower_bound(hazard.begin() + static_cast<ptrdiff_t>(birth_day) + 1,
                                       hazard.end(), target);
      if (it != hazard.end()) death = (it - hazard.begin()) * kSecondsPerDay;

      PostTally tally(horizon, death, theta);
      const Seconds limit = std::min(death, horizon);
      bool terminal = false;
      double free_start = static_cast<double>(birth);
      while (true) {
        const double start = free_start - free_mean * std::log(rng.UniformPositive());
        if (!(start < static_cast<double>(limit))) break;
        const auto s = static_cast<Seconds>(start);
        const Seconds length = model.SampleLength(rng);
        if (death != kNever && s + length >= death) {
          TerminalPhase(tally, s, death, theta);
          terminal = true;
          break;
        }
        for (Seconds k = theta; k <= length; k += theta) tally.FalseFlag(s + k);
        free_start = static_cast<double>(s + length);
      }
      if (!terminal && death != kNever) tally.TrueFlag(death + theta);
      tally.AddTo(r.once, r.multi);
    }
  });
  return Reduce(results, theta, *mech.down.shape());
}

}  // namespace

std::string_view ScenarioName(Scenario s) {
  return s == Scenario::kFlagOnce ? "once" : "multi";
}

Scenario ParseScenario(std::string_view name) {
  if (name == "once" || name == "flag-once") return Scenario::kFlagOnce;
  if (name == "multi" || name == "flag-multi") return Scenario::kFlagMulti;
  throw std::invalid_argument("unknown scenario: " + std::string(name));
}

std::string_view EngineName(Engine e) {
  return e == Engine::kExact ? "exact" : "accelerated";
}

Engine ParseEngine(std::string_view name) {
  if (name == "exact") return Engine::kExact;
  if (name == "accelerated") return Engine::kAccelerated;
  throw std::invalid_argument("unknown engine: " + std::string(name));
}

void SimulationConfig::Validate() const {
  if (initial_posts <= 0 || creations_per_day <= 0 || deletions_per_day <= 0 ||
      horizon_days <= 1) {
    throw std::invalid_argument("post counts must be positive and the horizon over one day");
  }
  // Every deletion day needs enough alive posts to choose victims from.
  const int64_t lowest_alive =
      std::min(initial_posts,
               initial_posts + (creations_per_day - deletions_per_day) * (horizon_days - 2));
  if (lowest_alive <= deletions_per_day) {
    throw std::invalid_argument("deletions outpace the alive population");
  }
  if (!(availability_target > 0.0 && availability_target < 1.0)) {
    throw std::invalid_argument("availability must lie strictly between 0 and 1");
  }
  if (!(mean_down > 1.0)) throw std::invalid_argument("mean down time must exceed 1 second");
  if (thresholds.empty()) throw std::invalid_argument("at least one threshold is required");
  for (Seconds theta : thresholds) {
    if (theta < 1) throw std::invalid_argument("thresholds must be positive");
    if (theta >= horizon()) throw std::invalid_argument("threshold must be shorter than the horizon");
  }
  if (!(scale_factor > 0.0 && scale_factor <= 1.0)) {
    throw std::invalid_argument("scale factor must lie in (0, 1]");
  }
  if (threads < 1) throw std::invalid_argument("thread count must be positive");
}

double ScenarioCounts::precision() const {
  if (tp + fp == 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(tp) / static_cast<double>(tp + fp);
}

double ScenarioCounts::recall() const {
  if (tp + fn == 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(tp) / static_cast<double>(tp + fn);
}

Mechanism MechanismForThreshold(const SimulationConfig& cfg, Seconds theta) {
  return BuildMechanism({cfg.availability_target, cfg.mean_down, cfg.theta_star.value_or(theta)});
}

ThresholdOutcome SimulateThreshold(const SimulationConfig& cfg, Seconds theta) {
  cfg.Validate();
  const Mechanism mech = MechanismForThreshold(cfg, theta);
  return cfg.engine == Engine::kExact ? RunExact(cfg, mech, theta)
                                      : RunAccelerated(cfg, mech, theta);
}

AdversaryReport RunSimulation(const SimulationConfig& cfg) {
  cfg.Validate();
  AdversaryReport report{cfg.scenario, cfg.engine, cfg.scale_factor, cfg.seed, {}};
  for (Seconds theta : cfg.thresholds) {
    const ThresholdOutcome out = SimulateThreshold(cfg, theta);
    const ScenarioCounts& c = cfg.scenario == Scenario::kFlagOnce ? out.once : out.multi;
    report.rows.push_back({theta, out.shape, c.tp, c.fp, c.fn, c.precision(), c.recall(),
                           static_cast<double>(c.fp) / cfg.scale_factor, c.fp_sq_sum});
  }
  return report;
}

int64_t TruePositiveClosedForm(const SimulationConfig& cfg, Seconds theta) {
  const Seconds window = cfg.horizon() - theta;
  if (window < 0) return 0;
  // Deletion days d >= 1 with d * day + theta <= horizon.
  const int64_t days = std::min<int64_t>(window / kSecondsPerDay, cfg.horizon_days - 1);
  return cfg.deletions_per_day * days;
}

double AnalyticExpectedFp(const SimulationConfig& cfg, const DurationDistribution& up,
                          const DurationDistribution& down, Seconds theta) {
  const Seconds horizon = cfg.horizon();
  const std::vector<double> hazard = CumulativeHazard(cfg);
  const LongPhaseModel model({up, down}, theta, horizon);
  const double base = down.LogCcdf(theta - 1);
  if (std::isinf(base)) return 0.0;

  // Age and time grid of six-hour cells; they nest inside days.
  constexpr Seconds kCell = 6 * 3600;
  const auto cells = static_cast<size_t>(horizon / kCell);
  const double cell = static_cast<double>(kCell);

  // Expected long-phase starts per age cell for a post that never dies.
  // Free stretches begin at birth and whenever a long phase ends; each
  // ends after an exponential time. Starts are placed at cell midpoints.
  std::vector<double> long_starts(cells, 0.0);
  std::vector<double> free_starts(cells, 0.0);
  const double decay_cell = std::exp(-cell / model.free_mean());
  const double decay_half = std::exp(-0.5 * cell / model.free_mean());
  // Probability that a long phase started mid cell i ends in cell i + m.
  std::vector<double> end_in(cells + 1, 0.0);
  for (size_t m = 1; m <= cells; ++m) {
    end_in[m] = model.Cdf((static_cast<double>(m) + 0.5) * cell) -
                model.Cdf((static_cast<double>(m) - 0.5) * cell);
  }
  double pending = 1.0;  // in a free stretch at the cell boundary
  for (size_t i = 0; i < cells; ++i) {
    long_starts[i] = pending * (1.0 - decay_cell) + free_starts[i] * (1.0 - decay_half);
    pending = pending * decay_cell + free_starts[i] * decay_half;
    if (long_starts[i] == 0.0) continue;
    for (size_t m = 1; i + m < cells; ++m) free_starts[i + m] += long_starts[i] * end_in[m];
  }

  // flag_weight[c]: expected false flags from a long start mid cell c,
  // times exp(H) at the cohort's birth, i.e. sum_k P(L >= k theta) *
  // exp(-H(flag day)) over flags inside the horizon.
  std::vector<double> flag_weight(cells, 0.0);
  for (size_t c = 0; c < cells; ++c) {
    const double mid = (static_cast<double>(c) + 0.5) * cell;
    for (Seconds k = 1;; ++k) {
      const double flag = mid + static_cast<double>(k * theta);
      if (flag > static_cast<double>(horizon)) break;
      const double log_tail = down.LogCcdf(k * theta - 1) - base;
      if (log_tail < std::log(kMarkCutoff)) break;
      const auto day = static_cast<size_t>(flag / static_cast<double>(kSecondsPerDay));
      flag_weight[c] += std::exp(log_tail - hazard[day]);
    }
  }

  const size_t cells_per_day = static_cast<size_t>(kSecondsPerDay / kCell);
  double total = 0.0;
  for (int64_t day = 0; day < cfg.horizon_days; ++day) {
    const double cohort =
        static_cast<double>(day == 0 ? cfg.initial_posts : cfg.creations_per_day);
    const size_t first = static_cast<size_t>(day) * cells_per_day;
    double sum = 0.0;
    for (size_t i = 0; first + i < cells; ++i) sum += long_starts[i] * flag_weight[first + i];
    total += cohort * std::exp(hazard[static_cast<size_t>(day)]) * sum;
  }
  return total;
}

std::vector<FftCell> FftTable(const SimulationConfig& base,
                              const std::vector<double>& availabilities,
                              const std::vector<Seconds>& thresholds) {
  std::vector<FftCell> cells;
  for (Scenario scenario : {Scenario::kFlagOnce, Scenario::kFlagMulti}) {
    for (double a : availabilities) {
      for (Seconds theta : thresholds) {
        cells.push_back({scenario, a, theta, 0.0, 0, 0.0, 0.0, 0.0, 0.0});
      }
    }
  }
  const size_t per_scenario = availabilities.size() * thresholds.size();
  for (size_t ai = 0; ai < availabilities.size(); ++ai) {
    SimulationConfig cfg = base;
    cfg.availability_target = availabilities[ai];
    cfg.thresholds = thresholds;
    for (size_t ti = 0; ti < thresholds.size(); ++ti) {
      const ThresholdOutcome out = SimulateThreshold(cfg, thresholds[ti]);
      const size_t idx = ai * thresholds.size() + ti;
      for (auto [cell, counts] : {std::pair{&cells[idx], &out.once},
                                  std::pair{&cells[per_scenario + idx], &out.multi}}) {
        cell->shape = out.shape;
        cell->fp = counts->fp;
        cell->fp_scaled = static_cast<double>(counts->fp) / cfg.scale_factor;
        cell->precision = counts->precision();
        cell->recall = counts->recall();
        cell->fp_sq_sum = counts->fp_sq_sum;
      }
    }
  }
  return cells;
}

}  // namespace lethe
