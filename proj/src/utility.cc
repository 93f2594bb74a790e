#include "lethe/utility.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string_view>
#include <unordered_map>

#include "lethe/parallel.h"
#include "lethe/schedule.h"

namespace lethe {
namespace {

constexpr std::string_view kHeader = "post_key,creation_epoch_seconds,offset_seconds";

Seconds ParseInteger(std::string_view field, size_t line, const char* what) {
  Seconds value = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() || field.empty()) {
    throw std::runtime_error("line " + std::to_string(line) + ": bad " + what + " '" +
                             std::string(field) + "'");
  }
  return value;
}

}  // namespace

size_t InteractionTrace::interaction_count() const {
  size_t n = 0;
  for (const auto& p : posts) n += p.offsets.size();
  return n;
}

InteractionTrace LoadTrace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace " + path.string());
  InteractionTrace trace;
  std::unordered_map<std::string, size_t> index;
  std::string line;
  for (size_t line_no = 1; std::getline(in, line); ++line_no) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && line == kHeader) continue;
    const size_t c1 = line.find(',');
    const size_t c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string::npos || line.find(',', c2 + 1) != std::string::npos) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": expected 3 columns");
    }
    const std::string_view view(line);
    std::string key(view.substr(0, c1));
    if (key.empty()) throw std::runtime_error("line " + std::to_string(line_no) + ": empty post_key");
    const Seconds created = ParseInteger(view.substr(c1 + 1, c2 - c1 - 1), line_no, "creation time");
    const Seconds offset = ParseInteger(view.substr(c2 + 1), line_no, "offset");
    if (offset < 0) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": negative offset");
    }
    auto [it, inserted] = index.try_emplace(key, trace.posts.size());
    if (inserted) {
      trace.posts.push_back({std::move(key), created, {}});
    } else if (trace.posts[it->second].creation_time != created) {
      throw std::runtime_error("line " + std::to_string(line_no) +
                               ": creation time differs from earlier rows of this post");
    }
    trace.posts[it->second].offsets.push_back(offset);
  }
  for (auto& p : trace.posts) std::sort(p.offsets.begin(), p.offsets.end());
  return trace;
}

void SaveTrace(const InteractionTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << kHeader << '\n';
  for (const auto& p : trace.posts) {
    for (Seconds offset : p.offsets) {
      out << p.post_key << ',' << p.creation_time << ',' << offset << '\n';
    }
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

InteractionTrace GenerateSyntheticTrace(int64_t n_posts, double interactions_mean,
                                        double decay_mean, uint64_t seed) {
  if (n_posts <= 0 || !(interactions_mean > 0.0) || !(decay_mean > 0.0)) {
    throw std::invalid_argument("synthetic trace parameters must be positive");
  }
  RandomStream rng = RandomStream::Derive(seed, {kTraceStream});
  std::poisson_distribution<int64_t> count(interactions_mean);
  std::exponential_distribution<double> offset(1.0 / decay_mean);
  InteractionTrace trace;
  trace.posts.reserve(static_cast<size_t>(n_posts));
  for (int64_t i = 0; i < n_posts; ++i) {
    TracePost p{"p" + std::to_string(i), i * 60, {}};
    const int64_t k = count(rng);
    p.offsets.reserve(static_cast<size_t>(k));
    for (int64_t j = 0; j < k; ++j) p.offsets.push_back(static_cast<Seconds>(offset(rng)));
    std::sort(p.offsets.begin(), p.offsets.end());
    trace.posts.push_back(std::move(p));
  }
  return trace;
}

InteractionTrace GenerateUniformTrace(int64_t n_posts, int64_t interactions_per_post,
                                      Seconds window, uint64_t seed) {
  if (n_posts <= 0 || interactions_per_post <= 0 || window <= 0) {
    throw std::invalid_argument("uniform trace parameters must be positive");
  }
  RandomStream rng = RandomStream::Derive(seed, {kTraceStream, 1});
  std::uniform_int_distribution<Seconds> offset(0, window - 1);
  InteractionTrace trace;
  trace.posts.reserve(static_cast<size_t>(n_posts));
  for (int64_t i = 0; i < n_posts; ++i) {
    TracePost p{"u" + std::to_string(i), i * 60, {}};
    for (int64_t j = 0; j < interactions_per_post; ++j) p.offsets.push_back(offset(rng));
    std::sort(p.offsets.begin(), p.offsets.end());
    trace.posts.push_back(std::move(p));
  }
  return trace;
}

std::optional<double> UtilityResult::utility() const {
  if (total() == 0) return std::nullopt;
  return static_cast<double>(allowed) / static_cast<double>(total());
}

UtilityResult EvaluateUtility(const InteractionTrace& trace, const DurationDistribution& up,
                              const DurationDistribution& down, uint64_t seed, int threads) {
  constexpr size_t kChunk = 256;
  const size_t n = trace.posts.size();
  const size_t n_chunks = (n + kChunk - 1) / kChunk;
  std::vector<UtilityResult> partial(n_chunks);
  ForEachChunk(n_chunks, threads, [&](size_t chunk) {
    UtilityResult& r = partial[chunk];
    for (size_t i = chunk * kChunk; i < std::min(n, (chunk + 1) * kChunk); ++i) {
      const TracePost& p = trace.posts[i];
      if (p.offsets.empty()) continue;
      const Schedule s =
          Schedule::Generate(up, down, p.creation_time, p.offsets.back() + 1,
                             RandomStream::Derive(seed, {kUtilityStream, i}));
      for (Seconds offset : p.offsets) {
        if (s.UpAt(p.creation_time + offset)) {
          ++r.allowed;
        } else {
          ++r.missed;
        }
      }
    }
  });
  UtilityResult total;
  for (const auto& r : partial) {
    total.allowed += r.allowed;
    total.missed += r.missed;
  }
  return total;
}

}  // namespace lethe
