#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pbkit/cache_sim.hpp"
#include "pbkit/pb_engine.hpp"
#include "pbkit/trace_gen.hpp"

namespace pbkit::cobra {

/// Per-level C-Buffer counts and bin ranges. Level 0 is L1, the last level
/// is the LLC whose buffers feed the in-memory bins.
struct CobraConfig {
  std::uint64_t index_range = 0;
  std::vector<std::uint64_t> buffers;
  std::vector<std::uint32_t> bin_ranges;
  std::vector<std::uint64_t> partition_bytes;
  std::uint32_t eviction_buffer_depth = 4;
  std::uint32_t line_size = 64;
  std::vector<std::string> warnings;

  std::size_t num_levels() const { return bin_ranges.size(); }
  std::uint32_t buffer_capacity() const { return line_size / sizeof(UpdateTuple); }
  /// Buffers actually addressed at a level: ceil(index_range / R).
  std::uint64_t used_buffers(std::size_t level) const {
    return (index_range + bin_ranges[level] - 1) / bin_ranges[level];
  }
  std::uint64_t num_memory_bins() const { return used_buffers(num_levels() - 1); }
  std::uint32_t memory_bin_range() const { return bin_ranges.back(); }

  /// Throws std::invalid_argument on a violated invariant.
  void check() const;
};

/// Y_i = largest power of two <= partition_bytes_i / line; R_i = smallest
/// power of two >= index_range / Y_i. Levels must have reserved ways.
CobraConfig derive_level_bin_ranges(std::uint64_t index_range,
                                    std::span<const sim::CacheLevelConfig> levels,
                                    std::uint32_t eviction_buffer_depth = 4);

/// Functional and timing model of the C-Buffer hierarchy. Times are core
/// cycles. Each level boundary has a binning engine that services queued
/// evictions in FIFO order; at most eviction_buffer_depth evictions wait at
/// a boundary, and a full boundary blocks whoever tries to enqueue.
class CBufferHierarchy {
 public:
  using MemoryWrite = std::function<void(std::uint64_t bin, std::span<const UpdateTuple>)>;

  CBufferHierarchy(const CobraConfig& cfg, const CostModel& cost = {});

  /// Appends a tuple to its L1 C-Buffer at time now. Returns the time the
  /// core may continue (> now when the L1 eviction buffer was full).
  std::uint64_t binupd(UpdateTuple t, std::uint64_t now);

  /// Completes every queued eviction whose engine finishes by now.
  void advance(std::uint64_t now);

  /// Phase end: evicts all residual C-Buffers level by level down to memory.
  /// Returns the time the last engine finishes.
  std::uint64_t flush(std::uint64_t now);

  /// Called for every LLC C-Buffer eviction (a stream-write to a memory bin).
  void on_memory_write(MemoryWrite fn) { memory_write_ = std::move(fn); }

  const CobraConfig& config() const { return cfg_; }
  std::size_t occupancy(std::size_t level, std::uint64_t buffer) const {
    return occupancy_[level][buffer];
  }
  std::size_t pending_evictions(std::size_t boundary) const { return queues_[boundary].size(); }
  const std::vector<std::vector<UpdateTuple>>& memory_bins() const { return memory_bins_; }

  std::uint64_t submitted() const { return submitted_; }
  std::uint64_t tuples_in_buffers() const;
  std::uint64_t tuples_in_eviction_buffers() const;
  std::uint64_t tuples_in_memory() const;

  /// Checks that every submitted tuple is in exactly one place and that each
  /// resident tuple sits in the buffer (or bin) its index maps to. Returns
  /// an empty string when consistent, else a description of the violation.
  std::string audit() const;

  std::uint64_t evictions(std::size_t level) const { return evictions_[level]; }
  std::uint64_t partition_accesses(std::size_t level) const { return partition_accesses_[level]; }
  /// Largest number of distinct next-level buffers one eviction scattered to.
  std::uint64_t max_fanout(std::size_t level) const { return max_fanout_[level]; }
  std::uint64_t engine_cycles() const { return engine_cycles_; }

 private:
  struct Eviction {
    std::vector<UpdateTuple> tuples;
    std::uint64_t enqueued_at;
  };

  std::uint64_t service_cycles(std::size_t boundary, std::size_t tuples) const;
  std::uint64_t head_ready(std::size_t boundary) const;
  std::uint64_t complete_head(std::size_t boundary);
  void drain_level(std::size_t boundary, std::uint64_t now);
  void drain_all(std::size_t boundary);
  std::uint64_t enqueue(std::size_t level, std::uint64_t buffer, std::uint64_t now);
  /// Returns true when the push filled the buffer.
  bool push(std::size_t level, UpdateTuple t);

  CobraConfig cfg_;
  CostModel cost_;
  std::vector<unsigned> shifts_;
  std::vector<std::vector<UpdateTuple>> storage_;
  std::vector<std::vector<std::uint32_t>> occupancy_;
  std::vector<std::deque<Eviction>> queues_;
  std::vector<std::uint64_t> engine_free_at_;
  std::vector<std::vector<UpdateTuple>> memory_bins_;
  MemoryWrite memory_write_;

  std::uint64_t submitted_ = 0;
  std::vector<std::uint64_t> evictions_;
  std::vector<std::uint64_t> partition_accesses_;
  std::vector<std::uint64_t> max_fanout_;
  std::uint64_t engine_cycles_ = 0;
};

/// TraceBinner backed by a C-Buffer hierarchy: each update is one binupd
/// (binupd_ops plus an L1 access latency), eviction buffer stalls are
/// charged to the core, and LLC evictions become off-critical-path
/// stream-writes to the memory bins.
class CobraBinner final : public sim::TraceBinner {
 public:
  CobraBinner(sim::Simulator& sim, const CobraConfig& cfg, sim::BinLayout memory_bins);

  void update(UpdateTuple t) override;
  sim::PartitionedUpdates finish() override;
  const CBufferHierarchy& hierarchy() const { return hierarchy_; }

 private:
  sim::Simulator& sim_;
  CBufferHierarchy hierarchy_;
  std::vector<std::uint64_t> cursor_;
};

struct CobraBinningResult {
  sim::SimStats stats;
  std::vector<std::vector<UpdateTuple>> memory_bins;
};

/// Binning of an explicit update stream through COBRA. levels must carry the
/// reserved ways the config was derived from.
CobraBinningResult simulate_binning_cobra(std::span<const UpdateTuple> updates,
                                          const CobraConfig& cfg,
                                          std::span<const sim::CacheLevelConfig> levels,
                                          const CostModel& cost = {});

/// The same stream binned by software PB at one bin range.
sim::SimStats simulate_binning_software(std::span<const UpdateTuple> updates, const PbConfig& cfg,
                                        std::span<const sim::CacheLevelConfig> levels,
                                        const CostModel& cost = {});

}  // namespace pbkit::cobra
