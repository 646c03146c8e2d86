#pragma once

#include <atomic>
#include <bit>
#include <cstdint>
#include <span>
#include <vector>

#include "pbkit/cost_model.hpp"
#include "pbkit/parallel.hpp"

namespace pbkit {

/// One binned update: the binning key and a 32-bit payload.
struct UpdateTuple {
  std::uint32_t index;
  std::uint32_t value;

  friend bool operator==(const UpdateTuple&, const UpdateTuple&) = default;
  friend auto operator<=>(const UpdateTuple&, const UpdateTuple&) = default;
};
static_assert(sizeof(UpdateTuple) == 8);

struct PbConfig {
  std::uint64_t index_range = 0;
  std::uint32_t bin_range = 1;
  unsigned num_threads = 1;
  std::uint32_t line_size = 64;

  /// Builds a config, rounding a non-power-of-two bin range up to the next
  /// power of two (a warning is printed to stderr).
  static PbConfig make(std::uint64_t index_range, std::uint64_t bin_range,
                       unsigned num_threads = 1, std::uint32_t line_size = 64);

  std::uint64_t num_bins() const { return (index_range + bin_range - 1) / bin_range; }
  unsigned bin_shift() const { return static_cast<unsigned>(std::countr_zero(bin_range)); }
  std::uint32_t buffer_capacity() const { return line_size / sizeof(UpdateTuple); }

  /// Throws std::invalid_argument on a violated invariant.
  void check() const;
};

inline std::uint32_t bin_id_of(std::uint32_t index, const PbConfig& cfg) {
  return index >> cfg.bin_shift();
}

/// Append-only tuple sequence stored as chunks that double in size from one
/// cacheline up to 64 KiB. Chunks never move once allocated.
class Bin {
 public:
  static constexpr std::size_t max_chunk_tuples = (64 * 1024) / sizeof(UpdateTuple);

  void append(std::span<const UpdateTuple> tuples);
  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }

  template <class Fn>
  void for_each(Fn&& fn) const {
    for (const auto& chunk : chunks_) {
      for (const UpdateTuple& t : chunk) fn(t);
    }
  }
  std::vector<UpdateTuple> to_vector() const;

 private:
  std::vector<std::vector<UpdateTuple>> chunks_;
  std::size_t size_ = 0;
};

/// bins[tid][bin_id], stored row-major by thread.
class BinSet {
 public:
  BinSet() = default;
  BinSet(unsigned num_threads, std::uint64_t num_bins)
      : num_threads_(num_threads), num_bins_(num_bins), bins_(num_threads * num_bins) {}

  unsigned num_threads() const { return num_threads_; }
  std::uint64_t num_bins() const { return num_bins_; }
  Bin& at(unsigned tid, std::uint64_t bin) { return bins_[tid * num_bins_ + bin]; }
  const Bin& at(unsigned tid, std::uint64_t bin) const { return bins_[tid * num_bins_ + bin]; }
  std::size_t total_tuples() const;

 private:
  unsigned num_threads_ = 0;
  std::uint64_t num_bins_ = 0;
  std::vector<Bin> bins_;
};

/// Cacheline-sized staging buffer for one bin.
class CoalescingBuffer {
 public:
  explicit CoalescingBuffer(std::span<UpdateTuple> slots) : slots_(slots) {}

  std::size_t capacity() const { return slots_.size(); }
  std::size_t occupancy() const { return occupancy_; }
  bool full() const { return occupancy_ == slots_.size(); }

  /// Returns true when the push filled the buffer.
  bool push(UpdateTuple t) {
    slots_[occupancy_++] = t;
    return full();
  }
  void drain_into(Bin& bin) {
    bin.append(slots_.first(occupancy_));
    occupancy_ = 0;
  }

 private:
  std::span<UpdateTuple> slots_;
  std::size_t occupancy_ = 0;
};

/// Per-thread binning state: one coalescing buffer per bin feeding the
/// thread's private row of the BinSet.
class ThreadBinner {
 public:
  ThreadBinner(BinSet& bins, unsigned tid, const PbConfig& cfg);

  void push(UpdateTuple t) {
    const std::uint32_t bin = t.index >> shift_;
    if (buffers_[bin].push(t)) buffers_[bin].drain_into(bins_.at(tid_, bin));
    ++pushed_;
  }
  /// Drains every partially filled buffer.
  void flush();
  std::uint64_t pushed() const { return pushed_; }

 private:
  BinSet& bins_;
  unsigned tid_;
  unsigned shift_;
  std::vector<UpdateTuple> storage_;
  std::vector<CoalescingBuffer> buffers_;
  std::uint64_t pushed_ = 0;
};

struct BinningResult {
  BinSet bins;
  /// Modeled instruction count of the phase (pb_binning_ops per update).
  std::uint64_t instructions = 0;
};

/// Generic binning phase. produce(binner, begin, end) is called once per
/// worker with a contiguous block of [0, num_items) and pushes the tuples
/// generated by those items.
template <class Produce>
BinningResult binning_phase_with(std::size_t num_items, const PbConfig& cfg, Produce&& produce,
                                 const CostModel& cost = {}) {
  cfg.check();
  BinningResult result{BinSet(cfg.num_threads, cfg.num_bins()), 0};
  std::vector<std::uint64_t> pushed(cfg.num_threads, 0);
  parallel_blocks(num_items, cfg.num_threads,
                  [&](unsigned tid, std::size_t begin, std::size_t end) {
                    ThreadBinner binner(result.bins, tid, cfg);
                    produce(binner, begin, end);
                    binner.flush();
                    pushed[tid] = binner.pushed();
                  });
  for (std::uint64_t n : pushed) result.instructions += n * cost.pb_binning_ops;
  return result;
}

/// Bins an explicit update stream. Each worker takes a contiguous block.
BinningResult binning_phase(std::span<const UpdateTuple> updates, const PbConfig& cfg,
                            const CostModel& cost = {});

/// Calls apply(tuple) once per binned tuple in bin-id-major, then thread-id,
/// then FIFO order. With several workers, bin ids are handed out dynamically
/// and each bin is consumed by exactly one worker.
template <class Apply>
void bin_read_phase(const BinSet& bins, Apply&& apply, unsigned num_workers = 1) {
  auto read_bin = [&](std::uint64_t bin) {
    for (unsigned tid = 0; tid < bins.num_threads(); ++tid) bins.at(tid, bin).for_each(apply);
  };
  if (num_workers <= 1) {
    for (std::uint64_t bin = 0; bin < bins.num_bins(); ++bin) read_bin(bin);
    return;
  }
  std::atomic<std::uint64_t> next{0};
  parallel_blocks(num_workers, num_workers, [&](unsigned, std::size_t, std::size_t) {
    for (std::uint64_t bin = next++; bin < bins.num_bins(); bin = next++) read_bin(bin);
  });
}

}  // namespace pbkit
