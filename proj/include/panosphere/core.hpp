#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace panosphere {

// Error taxonomy mirrored by the CLI exit codes: config 2, data 3, I/O 4.
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct data_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace rng {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Derives an independent stream seed from (run seed, index, stage tag).
inline std::uint64_t derive(std::uint64_t seed, std::uint64_t index,
                            std::uint64_t tag = 0) {
  return splitmix64(splitmix64(splitmix64(seed) ^ index) ^ tag);
}

/// Uniform double in [0, 1) from the top 53 bits of a 64-bit draw.
template <typename Engine>
double uniform01(Engine& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

}  // namespace rng

/// Worker-thread cap: hardware concurrency, clipped by PANOSPHERE_THREADS.
inline int thread_budget() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("PANOSPHERE_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v >= 1) hw = std::min<unsigned>(hw, static_cast<unsigned>(v));
  }
  return static_cast<int>(hw);
}

/// Runs fn(lo, hi) over disjoint chunks of [0, n). Results must not depend
/// on chunking; callers keep per-index outputs so any split is bit-identical.
template <typename Fn>
void parallel_chunks(std::size_t n, Fn&& fn) {
  int workers = thread_budget();
  if (workers <= 1 || n < 2048) {
    fn(static_cast<std::size_t>(0), n);
    return;
  }
  std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t lo = 0; lo < n; lo += chunk) {
    std::size_t hi = std::min(n, lo + chunk);
    pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace panosphere
