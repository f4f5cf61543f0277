#ifndef COUNTPROC_PARALLEL_HPP
#define COUNTPROC_PARALLEL_HPP

// Deterministic work distribution. Paths are grouped into fixed-size blocks
// whose boundaries do not depend on the worker count; each block is reduced
// sequentially in path order and blocks are merged in block order, so the
// result is bit-identical for any number of threads.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "countproc/error.hpp"
#include "countproc/rng.hpp"
#include "countproc/stats.hpp"

namespace countproc {

namespace detail {
inline std::atomic<int>& thread_override() {
  static std::atomic<int> value{0};
  return value;
}
}  // namespace detail

/// Worker count: explicit override, else COUNTPROC_THREADS, else all cores.
inline int default_threads() {
  if (int v = detail::thread_override().load(); v > 0) return v;
  if (const char* env = std::getenv("COUNTPROC_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

inline void set_default_threads(int n) { detail::thread_override().store(n > 0 ? n : 0); }

/// Calls body(i) for i in [0, count) on `threads` workers. If any call
/// throws, the exception from the smallest index is rethrown.
template <class F>
void parallel_for(std::size_t count, int threads, F&& body) {
  if (threads <= 0) threads = default_threads();
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::size_t err_index = count;
  std::exception_ptr err;
  auto run = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(err_mu);
        if (i < err_index) {
          err_index = i;
          err = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

constexpr std::size_t kBlockSize = 4096;

/// Splits [0, paths) into blocks of kBlockSize and folds each block into a
/// fresh accumulator with fold(acc, path). Returns accumulators in block order.
template <class Acc, class Init, class Fold>
std::vector<Acc> block_fold(std::size_t paths, int threads, Init&& init, Fold&& fold) {
  const std::size_t blocks = (paths + kBlockSize - 1) / kBlockSize;
  std::vector<Acc> out;
  out.reserve(blocks);
  for (std::size_t b = 0; b < blocks; ++b) out.push_back(init());
  parallel_for(blocks, threads, [&](std::size_t b) {
    const std::size_t lo = b * kBlockSize;
    const std::size_t hi = std::min(paths, lo + kBlockSize);
    for (std::size_t p = lo; p < hi; ++p) fold(out[b], p);
  });
  return out;
}

/// Monte Carlo means of K per-path quantities. Path p draws from
/// RngStream(seed, p); sample(rng, p, out) writes the K values into out.
template <class Sample>
std::vector<Estimate> mc_means(std::size_t paths, std::uint64_t seed, std::size_t K,
                               int threads, Sample&& sample) {
  detail::require(paths >= 2, "mc_means: need at least 2 paths");
  auto blocks = block_fold<std::vector<RunningMoments>>(
      paths, threads, [K] { return std::vector<RunningMoments>(K); },
      [&](std::vector<RunningMoments>& acc, std::size_t p) {
        thread_local std::vector<double> buf;
        buf.assign(K, 0.0);
        RngStream rng(seed, p);
        sample(rng, p, std::span<double>(buf));
        for (std::size_t i = 0; i < K; ++i) acc[i].add(buf[i]);
      });
  std::vector<RunningMoments> total(K);
  for (const auto& b : blocks)
    for (std::size_t i = 0; i < K; ++i) total[i].merge(b[i]);
  std::vector<Estimate> out(K);
  for (std::size_t i = 0; i < K; ++i) out[i] = total[i].estimate();
  return out;
}

}  // namespace countproc

#endif  // COUNTPROC_PARALLEL_HPP
