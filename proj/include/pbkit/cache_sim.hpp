#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "pbkit/cost_model.hpp"

namespace pbkit::sim {

enum class AccessKind : std::uint8_t { read = 0, write = 1, stream_write = 2 };

struct MemEvent {
  AccessKind kind = AccessKind::read;
  std::uint64_t address = 0;
  std::uint16_t size = 8;

  friend bool operator==(const MemEvent&, const MemEvent&) = default;
};

struct CacheLevelConfig {
  std::string name;
  std::uint64_t capacity_bytes = 0;
  std::uint32_t associativity = 1;
  std::uint32_t line_size = 64;
  /// Ways withheld from ordinary data (C-Buffer partition).
  std::uint32_t reserved_ways = 0;

  std::uint64_t num_sets() const { return capacity_bytes / (std::uint64_t{associativity} * line_size); }
  std::uint64_t partition_bytes() const { return std::uint64_t{reserved_ways} * num_sets() * line_size; }
  /// Throws std::invalid_argument on a violated invariant.
  void check() const;
};

/// 32 KiB / 256 KiB / 2 MiB, 8/8/16-way, 64 B lines, no reserved ways.
std::vector<CacheLevelConfig> default_hierarchy();

/// Copy of levels with a fraction of each level's ways reserved (rounded
/// down, at least one way).
std::vector<CacheLevelConfig> with_partitions(std::vector<CacheLevelConfig> levels,
                                              double fraction = 0.25);

struct LevelStats {
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  std::uint64_t writebacks = 0;
  /// C-Buffer reads/writes served from the reserved ways.
  std::uint64_t partition_accesses = 0;
  /// C-Buffers of this level evicted by a binning engine.
  std::uint64_t cbuffer_evictions = 0;

  std::uint64_t accesses() const { return hits + misses; }
  friend bool operator==(const LevelStats&, const LevelStats&) = default;
};

struct SimStats {
  std::vector<LevelStats> levels;
  std::uint64_t dram_reads = 0;
  std::uint64_t dram_writebacks = 0;
  std::uint64_t stream_write_lines = 0;
  std::uint64_t instructions = 0;
  std::uint64_t cycles = 0;
  /// Core cycles lost waiting for a free eviction buffer (included in cycles).
  std::uint64_t stall_cycles = 0;
  /// Binning-engine busy time, off the core's critical path.
  std::uint64_t engine_cycles = 0;

  std::uint64_t dram_lines() const { return dram_reads + dram_writebacks + stream_write_lines; }
  std::uint64_t l1_misses() const { return levels.empty() ? 0 : levels[0].misses; }

  SimStats& operator+=(const SimStats& other);
  /// Every counter multiplied by k.
  SimStats scaled(std::uint64_t k) const;
  friend SimStats operator-(const SimStats& a, const SimStats& b);
  friend bool operator==(const SimStats&, const SimStats&) = default;
};

/// Receiver of a simulated execution: memory events plus retired operations.
class TraceSink {
 public:
  virtual ~TraceSink() = default;
  virtual void event(const MemEvent& ev) = 0;
  virtual void ops(std::uint64_t n) = 0;
};

/// Collects a trace in memory.
class TraceRecorder final : public TraceSink {
 public:
  void event(const MemEvent& ev) override { events.push_back(ev); }
  void ops(std::uint64_t n) override { total_ops += n; }

  std::vector<MemEvent> events;
  std::uint64_t total_ops = 0;
};

/// One set-associative LRU cache level.
class CacheLevel {
 public:
  struct Victim {
    std::uint64_t line;
    bool dirty;
  };

  explicit CacheLevel(const CacheLevelConfig& cfg);

  /// On hit refreshes recency (and sets dirty for writes) and returns true.
  bool lookup(std::uint64_t line, bool write);
  /// Installs a line known to be absent; returns true and fills victim when
  /// a valid line was displaced.
  bool fill(std::uint64_t line, bool dirty, Victim& victim);
  bool mark_dirty_if_present(std::uint64_t line);
  void invalidate(std::uint64_t line);
  /// Shrinks or grows the usable ways; displaced lines are returned.
  std::vector<Victim> set_reserved_ways(std::uint32_t reserved);

  const CacheLevelConfig& config() const { return cfg_; }
  std::uint32_t usable_ways() const { return cfg_.associativity - reserved_; }

 private:
  struct Way {
    std::uint64_t line = 0;
    std::uint64_t stamp = 0;
    bool valid = false;
    bool dirty = false;
  };
  Way* set_of(std::uint64_t line) { return &ways_[(line % sets_) * cfg_.associativity]; }

  CacheLevelConfig cfg_;
  std::uint64_t sets_;
  std::uint32_t reserved_;
  std::uint64_t clock_ = 0;
  std::vector<Way> ways_;
};

/// Write-allocate, write-back, non-inclusive hierarchy over DRAM. Dirty
/// victims are written back to the next level holding the line, else to
/// DRAM, without allocating. Stream writes invalidate cached copies and
/// transfer whole lines to DRAM.
class Simulator final : public TraceSink {
 public:
  Simulator(std::vector<CacheLevelConfig> levels, CostModel cost = {});

  /// Updates counters and returns the access latency; does not charge cycles.
  std::uint32_t access(const MemEvent& ev);
  void charge(std::uint64_t cycles) { stats_.cycles += cycles; }

  /// access() plus charging its latency to the core.
  void event(const MemEvent& ev) override { charge(access(ev)); }
  /// Retires n operations at cycles_per_op.
  void ops(std::uint64_t n) override {
    stats_.instructions += n;
    stats_.cycles += n * cost_.cycles_per_op;
  }

  void set_reserved_ways(std::size_t level, std::uint32_t ways);
  /// Restores every level's configured reserved ways.
  void reserve_partitions();
  void release_partitions();

  const std::vector<CacheLevelConfig>& levels() const { return configs_; }
  const CostModel& cost() const { return cost_; }
  std::uint32_t line_size() const { return configs_.front().line_size; }
  SimStats& stats() { return stats_; }
  const SimStats& stats() const { return stats_; }

 private:
  std::uint32_t access_line(std::uint64_t line, bool write);
  void write_back(std::size_t from_level, std::uint64_t line);

  std::vector<CacheLevelConfig> configs_;
  std::vector<CacheLevel> levels_;
  CostModel cost_;
  SimStats stats_;
};

/// Runs a trace from cold caches, charging every access's latency.
SimStats simulate_trace(std::span<const MemEvent> events, std::span<const CacheLevelConfig> levels,
                        const CostModel& cost = {});

/// Binary trace: "TRC1" then (kind u8, address u64 LE, size u16 LE) records.
void write_trace(std::ostream& out, std::span<const MemEvent> events);
std::vector<MemEvent> read_trace(std::istream& in);

}  // namespace pbkit::sim
