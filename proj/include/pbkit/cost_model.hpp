#pragma once

#include <cstdint>
#include <vector>

namespace pbkit {

/// Abstract cycle and instruction costs shared by the native engine's
/// instruction estimates and the simulator. Latencies are the total cost of
/// an access served by that level.
struct CostModel {
  std::vector<std::uint32_t> hit_latency{4, 12, 40};
  std::uint32_t dram_latency = 200;
  /// Core-visible cost of one non-temporal line write.
  std::uint32_t stream_write_cycles = 20;
  std::uint32_t cycles_per_op = 1;

  /// Per-edge work of an irregular update (load, store, increment, loop).
  std::uint32_t update_ops = 4;
  /// Software binning per update: index compute, buffer bookkeeping, store,
  /// amortized flush.
  std::uint32_t pb_binning_ops = 9;
  std::uint32_t binupd_ops = 1;
  /// Bin-read per tuple: the same update applied from a bin.
  std::uint32_t binread_ops = 4;
  /// Per-vertex work in dense vertex passes.
  std::uint32_t vertex_ops = 4;
  /// Binning-engine time to unpack and route one tuple during an eviction.
  std::uint32_t engine_tuple_cycles = 1;

  std::uint32_t latency_at(std::size_t level) const {
    return level < hit_latency.size() ? hit_latency[level] : dram_latency;
  }
};

}  // namespace pbkit
