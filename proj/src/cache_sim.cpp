#include "pbkit/cache_sim.hpp"

#include <algorithm>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "le_io.hpp"

namespace pbkit::sim {

void CacheLevelConfig::check() const {
  if (associativity == 0 || line_size == 0) {
    throw std::invalid_argument(name + ": associativity and line size must be positive");
  }
  const std::uint64_t set_bytes = std::uint64_t{associativity} * line_size;
  if (capacity_bytes == 0 || capacity_bytes % set_bytes != 0) {
    throw std::invalid_argument(name + ": capacity must be a positive multiple of associativity * line size");
  }
  if (reserved_ways >= associativity) {
    throw std::invalid_argument(name + ": reserved ways must be fewer than the associativity");
  }
}

std::vector<CacheLevelConfig> default_hierarchy() {
  return {
      {"L1", 32 * 1024, 8, 64, 0},
      {"L2", 256 * 1024, 8, 64, 0},
      {"LLC", 2 * 1024 * 1024, 16, 64, 0},
  };
}

std::vector<CacheLevelConfig> with_partitions(std::vector<CacheLevelConfig> levels, double fraction) {
  for (auto& level : levels) {
    const auto ways = static_cast<std::uint32_t>(level.associativity * fraction);
    level.reserved_ways = std::clamp<std::uint32_t>(ways, 1, level.associativity - 1);
  }
  return levels;
}

SimStats& SimStats::operator+=(const SimStats& other) {
  if (levels.size() < other.levels.size()) levels.resize(other.levels.size());
  for (std::size_t i = 0; i < other.levels.size(); ++i) {
    levels[i].hits += other.levels[i].hits;
    levels[i].misses += other.levels[i].misses;
    levels[i].writebacks += other.levels[i].writebacks;
    levels[i].partition_accesses += other.levels[i].partition_accesses;
    levels[i].cbuffer_evictions += other.levels[i].cbuffer_evictions;
  }
  dram_reads += other.dram_reads;
  dram_writebacks += other.dram_writebacks;
  stream_write_lines += other.stream_write_lines;
  instructions += other.instructions;
  cycles += other.cycles;
  stall_cycles += other.stall_cycles;
  engine_cycles += other.engine_cycles;
  return *this;
}

SimStats SimStats::scaled(std::uint64_t k) const {
  SimStats s = *this;
  for (auto& l : s.levels) {
    l.hits *= k;
    l.misses *= k;
    l.writebacks *= k;
    l.partition_accesses *= k;
    l.cbuffer_evictions *= k;
  }
  s.dram_reads *= k;
  s.dram_writebacks *= k;
  s.stream_write_lines *= k;
  s.instructions *= k;
  s.cycles *= k;
  s.stall_cycles *= k;
  s.engine_cycles *= k;
  return s;
}

SimStats operator-(const SimStats& a, const SimStats& b) {
  SimStats d = a;
  for (std::size_t i = 0; i < b.levels.size() && i < d.levels.size(); ++i) {
    d.levels[i].hits -= b.levels[i].hits;
    d.levels[i].misses -= b.levels[i].misses;
    d.levels[i].writebacks -= b.levels[i].writebacks;
    d.levels[i].partition_accesses -= b.levels[i].partition_accesses;
    d.levels[i].cbuffer_evictions -= b.levels[i].cbuffer_evictions;
  }
  d.dram_reads -= b.dram_reads;
  d.dram_writebacks -= b.dram_writebacks;
  d.stream_write_lines -= b.stream_write_lines;
  d.instructions -= b.instructions;
  d.cycles -= b.cycles;
  d.stall_cycles -= b.stall_cycles;
  d.engine_cycles -= b.engine_cycles;
  return d;
}

CacheLevel::CacheLevel(const CacheLevelConfig& cfg)
    : cfg_(cfg), sets_(cfg.num_sets()), reserved_(cfg.reserved_ways) {
  cfg_.check();
  ways_.resize(sets_ * cfg_.associativity);
}

bool CacheLevel::lookup(std::uint64_t line, bool write) {
  Way* set = set_of(line);
  const std::uint32_t usable = usable_ways();
  for (std::uint32_t w = 0; w < usable; ++w) {
    if (set[w].valid && set[w].line == line) {
      set[w].stamp = ++clock_;
      set[w].dirty |= write;
      return true;
    }
  }
  return false;
}

bool CacheLevel::fill(std::uint64_t line, bool dirty, Victim& victim) {
  Way* set = set_of(line);
  const std::uint32_t usable = usable_ways();
  Way* slot = &set[0];
  for (std::uint32_t w = 0; w < usable; ++w) {
    if (!set[w].valid) {
      slot = &set[w];
      break;
    }
    if (set[w].stamp < slot->stamp) slot = &set[w];
  }
  const bool displaced = slot->valid;
  if (displaced) victim = {slot->line, slot->dirty};
  *slot = {line, ++clock_, true, dirty};
  return displaced;
}

bool CacheLevel::mark_dirty_if_present(std::uint64_t line) {
  Way* set = set_of(line);
  for (std::uint32_t w = 0; w < usable_ways(); ++w) {
    if (set[w].valid && set[w].line == line) {
      set[w].dirty = true;
      return true;
    }
  }
  return false;
}

void CacheLevel::invalidate(std::uint64_t line) {
  Way* set = set_of(line);
  for (std::uint32_t w = 0; w < usable_ways(); ++w) {
    if (set[w].valid && set[w].line == line) set[w].valid = false;
  }
}

std::vector<CacheLevel::Victim> CacheLevel::set_reserved_ways(std::uint32_t reserved) {
  if (reserved >= cfg_.associativity) {
    throw std::invalid_argument(cfg_.name + ": reserved ways must be fewer than the associativity");
  }
  std::vector<Victim> displaced;
  const std::uint32_t old_usable = usable_ways();
  const std::uint32_t new_usable = cfg_.associativity - reserved;
  reserved_ = reserved;
  if (new_usable >= old_usable) return displaced;
  for (std::uint64_t s = 0; s < sets_; ++s) {
    Way* set = &ways_[s * cfg_.associativity];
    // Most recently used lines move to the front and survive.
    std::sort(set, set + old_usable, [](const Way& a, const Way& b) {
      if (a.valid != b.valid) return a.valid;
      return a.stamp > b.stamp;
    });
    for (std::uint32_t w = new_usable; w < old_usable; ++w) {
      if (set[w].valid) displaced.push_back({set[w].line, set[w].dirty});
      set[w].valid = false;
    }
  }
  return displaced;
}

Simulator::Simulator(std::vector<CacheLevelConfig> levels, CostModel cost)
    : configs_(std::move(levels)), cost_(std::move(cost)) {
  if (configs_.empty()) throw std::invalid_argument("simulator needs at least one cache level");
  for (const auto& cfg : configs_) {
    cfg.check();
    if (cfg.line_size != configs_.front().line_size) {
      throw std::invalid_argument("all cache levels must share one line size");
    }
    levels_.emplace_back(cfg);
  }
  stats_.levels.resize(configs_.size());
}

std::uint32_t Simulator::access(const MemEvent& ev) {
  const std::uint32_t line_size = this->line_size();
  if (ev.size == 0 || ev.size > line_size) {
    throw std::invalid_argument("malformed event: size " + std::to_string(ev.size) +
                                " outside [1, " + std::to_string(line_size) + "]");
  }
  const std::uint64_t first = ev.address / line_size;
  const std::uint64_t last = (ev.address + ev.size - 1) / line_size;
  std::uint32_t latency = 0;
  for (std::uint64_t line = first; line <= last; ++line) {
    if (ev.kind == AccessKind::stream_write) {
      for (auto& level : levels_) level.invalidate(line);
      ++stats_.stream_write_lines;
      latency += cost_.stream_write_cycles;
    } else {
      latency += access_line(line, ev.kind == AccessKind::write);
    }
  }
  return latency;
}

std::uint32_t Simulator::access_line(std::uint64_t line, bool write) {
  std::size_t served = levels_.size();
  for (std::size_t i = 0; i < levels_.size(); ++i) {
    if (levels_[i].lookup(line, write && i == 0)) {
      ++stats_.levels[i].hits;
      served = i;
      break;
    }
    ++stats_.levels[i].misses;
  }
  if (served == levels_.size()) ++stats_.dram_reads;
  // Fill every level above the one that served the access.
  for (std::size_t i = served; i-- > 0;) {
    CacheLevel::Victim victim{};
    if (levels_[i].fill(line, write && i == 0, victim) && victim.dirty) {
      ++stats_.levels[i].writebacks;
      write_back(i + 1, victim.line);
    }
  }
  return cost_.latency_at(served);
}

void Simulator::write_back(std::size_t from_level, std::uint64_t line) {
  for (std::size_t i = from_level; i < levels_.size(); ++i) {
    if (levels_[i].mark_dirty_if_present(line)) return;
  }
  ++stats_.dram_writebacks;
}

void Simulator::set_reserved_ways(std::size_t level, std::uint32_t ways) {
  for (const auto& victim : levels_.at(level).set_reserved_ways(ways)) {
    if (victim.dirty) {
      ++stats_.levels[level].writebacks;
      write_back(level + 1, victim.line);
    }
  }
}

void Simulator::reserve_partitions() {
  for (std::size_t i = 0; i < levels_.size(); ++i) set_reserved_ways(i, configs_[i].reserved_ways);
}

void Simulator::release_partitions() {
  for (std::size_t i = 0; i < levels_.size(); ++i) set_reserved_ways(i, 0);
}

SimStats simulate_trace(std::span<const MemEvent> events, std::span<const CacheLevelConfig> levels,
                        const CostModel& cost) {
  Simulator sim({levels.begin(), levels.end()}, cost);
  for (const MemEvent& ev : events) sim.event(ev);
  return sim.stats();
}

namespace {
constexpr char trace_magic[4] = {'T', 'R', 'C', '1'};
}

void write_trace(std::ostream& out, std::span<const MemEvent> events) {
  out.write(trace_magic, 4);
  for (const MemEvent& ev : events) {
    detail::put_le(out, static_cast<std::uint8_t>(ev.kind));
    detail::put_le(out, ev.address);
    detail::put_le(out, ev.size);
  }
}

std::vector<MemEvent> read_trace(std::istream& in) {
  char magic[4] = {};
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, trace_magic, 4) != 0) {
    throw FormatError("bad magic");
  }
  std::vector<MemEvent> events;
  std::uint8_t kind = 0;
  while (detail::try_get_le(in, kind, "trace record")) {
    if (kind > 2) throw FormatError("bad event kind " + std::to_string(kind));
    MemEvent ev;
    ev.kind = static_cast<AccessKind>(kind);
    ev.address = detail::get_le<std::uint64_t>(in, "trace record");
    ev.size = detail::get_le<std::uint16_t>(in, "trace record");
    events.push_back(ev);
  }
  return events;
}

}  // namespace pbkit::sim
