#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pbkit/cache_sim.hpp"
#include "pbkit/graph.hpp"
#include "pbkit/pb_engine.hpp"

namespace pbkit::sim {

struct Region {
  std::uint64_t base = 0;
  std::uint64_t bytes = 0;

  std::uint64_t at(std::uint64_t index, std::uint32_t elem_size) const { return base + index * elem_size; }
};

/// Bump allocator for simulated data structures. Regions are page aligned
/// and never overlap.
class AddressSpace {
 public:
  Region allocate(std::uint64_t bytes, std::uint64_t align = 4096);

 private:
  std::uint64_t next_ = 1ull << 20;
};

/// Tuples grouped by bin id, FIFO within a bin.
struct PartitionedUpdates {
  std::vector<std::uint64_t> bin_start{0};
  std::vector<UpdateTuple> tuples;

  std::uint64_t num_bins() const { return bin_start.size() - 1; }
  std::span<const UpdateTuple> bin(std::uint64_t b) const {
    return std::span(tuples).subspan(bin_start[b], bin_start[b + 1] - bin_start[b]);
  }
  static PartitionedUpdates from_bins(const std::vector<std::vector<UpdateTuple>>& bins);
};

/// Stable partition of a single-worker update stream (the bins software PB
/// produces with one thread).
PartitionedUpdates partition_updates(std::span<const UpdateTuple> updates, const PbConfig& cfg);

/// Line-granular placement of in-memory bins: bin b starts at start[b].
struct BinLayout {
  std::vector<std::uint64_t> start;

  static BinLayout from_counts(std::span<const std::uint64_t> counts, std::uint64_t base,
                               std::uint32_t line_size);
  std::uint64_t end() const { return start.back(); }
};

std::vector<std::uint64_t> count_bins(std::span<const vertex_t> keys, unsigned shift,
                                      std::uint64_t num_bins);

/// Destination of binned updates inside a traced kernel.
class TraceBinner {
 public:
  virtual ~TraceBinner() = default;
  virtual void update(UpdateTuple t) = 0;
  /// Phase end: flush residual buffers and return the in-memory bins.
  virtual PartitionedUpdates finish() = 0;
};

/// Software propagation blocking. Each update costs pb_binning_ops and a
/// read-modify-write of its bin's coalescing-buffer line; every full (and,
/// at finish, partial) buffer is stream-written to its bin.
class SoftwareBinner final : public TraceBinner {
 public:
  SoftwareBinner(TraceSink& sink, const PbConfig& cfg, Region buffers, BinLayout bins,
                 const CostModel& cost);

  void update(UpdateTuple t) override;
  PartitionedUpdates finish() override;
  std::uint64_t flushes() const { return flushes_; }

 private:
  void flush(std::uint64_t bin);

  TraceSink& sink_;
  unsigned shift_;
  std::uint32_t line_size_;
  std::uint32_t capacity_;
  Region buffers_;
  BinLayout layout_;
  std::uint32_t binning_ops_;
  std::vector<std::uint32_t> occupancy_;
  std::vector<std::uint64_t> cursor_;
  std::vector<std::vector<UpdateTuple>> bins_;
  std::uint64_t flushes_ = 0;
};

struct BinningLayout {
  Region input;
  Region buffers;
  Region bins;
};

struct BinReadLayout {
  Region bin_meta;
  Region bins;
  Region offsets;
  Region neighbors;
};

BinningLayout make_binning_layout(AddressSpace& space, std::span<const UpdateTuple> updates,
                                  const PbConfig& cfg);
BinReadLayout make_binread_layout(AddressSpace& space, const PartitionedUpdates& bins,
                                  std::uint64_t num_vertices, std::uint64_t num_edges,
                                  std::uint32_t line_size = 64);

/// Binning of an explicit update stream: sequential 8-byte reads of the
/// stream, buffer read-modify-writes, one stream-write per flush.
std::vector<MemEvent> trace_of_binning(std::span<const UpdateTuple> updates, const PbConfig& cfg,
                                       const BinningLayout& layout);

/// NeighPop bin-read: per bin a metadata read, then per tuple a sequential
/// tuple read, offsets[index] read, neighbors[cursor] write and
/// offsets[index] write.
std::vector<MemEvent> trace_of_binread(const PartitionedUpdates& bins, const PbConfig& cfg,
                                       const BinReadLayout& layout,
                                       std::span<const offset_t> offsets);

// Streaming emitters used by the pipeline. Element sizes: edges and tuples
// 8 B, offsets 8 B, neighbors 4 B, degrees 4 B, ranks/contributions 8 B.

struct NeighPopRegions {
  Region edges;
  Region offsets;
  Region neighbors;
};

/// Baseline atomic-cursor fill pass keyed by src (or by dst when by_dst).
void emit_neighpop_baseline(TraceSink& sink, const EdgeList& el, const NeighPopRegions& r,
                            std::span<const offset_t> offsets, bool by_dst, const CostModel& cost);
void emit_neighpop_binning(TraceSink& sink, const EdgeList& el, Region edges, TraceBinner& binner);
void emit_neighpop_binread(TraceSink& sink, const PartitionedUpdates& bins, Region bin_meta,
                           Region bins_region, std::uint32_t line_size, const NeighPopRegions& r,
                           std::span<const offset_t> offsets, const CostModel& cost);

/// One pass over the edges incrementing a degree counter per key side.
void emit_degree_count(TraceSink& sink, const EdgeList& el, Region edges, Region* out_degrees,
                       Region* in_degrees, const CostModel& cost);
/// Scan of a degree array into an offsets array.
void emit_prefix_sum(TraceSink& sink, vertex_t n, Region degrees, Region offsets,
                     const CostModel& cost);

struct PageRankRegions {
  Region ranks;
  Region contrib;
  Region next;
  Region out_degrees;
};

/// One iteration of PageRank straight off the edge list (push, unbinned).
void emit_pagerank_edgelist_iteration(TraceSink& sink, const EdgeList& el, Region edges,
                                      const PageRankRegions& r, const CostModel& cost);
/// One pull iteration over a CSC.
void emit_pagerank_pull_iteration(TraceSink& sink, const CsrGraph& csc, Region csc_offsets,
                                  Region csc_neighbors, const PageRankRegions& r,
                                  const CostModel& cost);
/// Binning half of a push iteration over a CSR: tuples (dst, contribution).
void emit_pagerank_binning(TraceSink& sink, const CsrGraph& csr, Region csr_offsets,
                           Region csr_neighbors, const PageRankRegions& r, TraceBinner& binner,
                           const CostModel& cost);
/// Bin-read half: next[dst] += contribution, then the dense rank update.
void emit_pagerank_binread(TraceSink& sink, const PartitionedUpdates& bins, Region bin_meta,
                           Region bins_region, std::uint32_t line_size, vertex_t n,
                           const PageRankRegions& r, const CostModel& cost);

}  // namespace pbkit::sim
