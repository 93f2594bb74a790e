#ifndef LETHE_PARALLEL_H_
#define LETHE_PARALLEL_H_

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace lethe {

// Default worker count: all hardware threads, at least one.
inline int DefaultThreads() {
  return std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
}

// Calls fn(chunk) for chunk in [0, n_chunks) on up to `threads` workers.
// Results must be written to per-chunk slots and reduced by the caller in
// chunk order; that keeps outputs independent of the thread count.
template <class Fn>
void ForEachChunk(size_t n_chunks, int threads, Fn&& fn) {
  const size_t workers = std::min<size_t>(std::max(1, threads), n_chunks);
  if (workers <= 1) {
    for (size_t c = 0; c < n_chunks; ++c) fn(c);
    return;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      try {
        for (size_t c = next.fetch_add(1); c < n_chunks; c = next.fetch_add(1)) fn(c);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
        next.store(n_chunks);
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace lethe

#endif  // LETHE_PARALLEL_H_
