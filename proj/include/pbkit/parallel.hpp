#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace pbkit {

/// Splits [0, n) into num_threads contiguous blocks and runs
/// fn(tid, begin, end) for each on its own thread. Block tid covers
/// [tid * n / T, (tid + 1) * n / T). Joins before returning.
template <class Fn>
void parallel_blocks(std::size_t n, unsigned num_threads, Fn&& fn) {
  num_threads = std::max(1u, num_threads);
  auto block_begin = [&](unsigned tid) { return n * tid / num_threads; };
  if (num_threads == 1) {
    fn(0u, std::size_t{0}, n);
    return;
  }
  std::vector<std::jthread> workers;
  workers.reserve(num_threads - 1);
  for (unsigned tid = 1; tid < num_threads; ++tid) {
    workers.emplace_back([&, tid] { fn(tid, block_begin(tid), block_begin(tid + 1)); });
  }
  fn(0u, block_begin(0), block_begin(1));
}

}  // namespace pbkit
