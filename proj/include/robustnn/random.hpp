#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <random>
#include <thread>
#include <vector>

namespace robustnn {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Used to derive independent stream seeds.
std::uint64_t splitmix64(std::uint64_t x);

/// Counter-based seed derivation: the seed for work item (stream, index)
/// depends only on the base seed and the item coordinates, never on which
/// worker ran it or in which order.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream,
                          std::uint64_t index = 0);

Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0,
             std::uint64_t index = 0);

/// Worker count used by the Monte Carlo loops. 0 means hardware concurrency.
void set_worker_threads(unsigned threads);
unsigned worker_threads();

/// Runs body(i) for i in [0, n). Each index is processed exactly once; the
/// caller writes results into per-index slots so aggregation stays ordered.
template <typename Body>
void parallel_for(std::size_t n, Body&& body) {
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(worker_threads(), n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace robustnn
