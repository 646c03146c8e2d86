#include "pbkit/cobra.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>

namespace pbkit::cobra {

void CobraConfig::check() const {
  const std::size_t n = bin_ranges.size();
  if (n == 0 || buffers.size() != n || partition_bytes.size() != n) {
    throw std::invalid_argument("cobra config needs one buffer count and bin range per level");
  }
  if (eviction_buffer_depth == 0) throw std::invalid_argument("eviction buffer depth must be >= 1");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::has_single_bit(bin_ranges[i])) {
      throw std::invalid_argument("level " + std::to_string(i) + " bin range is not a power of two");
    }
    if (buffers[i] * line_size > partition_bytes[i]) {
      throw std::invalid_argument("level " + std::to_string(i) + " buffers exceed its partition");
    }
    if (i + 1 < n) {
      if (buffers[i] > buffers[i + 1]) throw std::invalid_argument("buffer counts must not shrink");
      if (bin_ranges[i] % bin_ranges[i + 1] != 0) {
        throw std::invalid_argument("bin ranges must nest (R_i multiple of R_i+1)");
      }
    }
  }
  if (buffers.back() * bin_ranges.back() < index_range) {
    throw std::invalid_argument("last-level buffers do not cover the index range");
  }
}

CobraConfig derive_level_bin_ranges(std::uint64_t index_range,
                                    std::span<const sim::CacheLevelConfig> levels,
                                    std::uint32_t eviction_buffer_depth) {
  if (levels.empty()) throw std::invalid_argument("need at least one cache level");
  CobraConfig cfg;
  cfg.index_range = index_range;
  cfg.eviction_buffer_depth = eviction_buffer_depth;
  cfg.line_size = levels.front().line_size;
  for (const auto& level : levels) {
    const std::uint64_t bytes = level.partition_bytes();
    if (bytes < level.line_size) {
      throw std::invalid_argument(level.name + " has no C-Buffer partition");
    }
    const std::uint64_t y = std::bit_floor(bytes / level.line_size);
    if (!cfg.buffers.empty() && y < cfg.buffers.back()) {
      throw std::invalid_argument(level.name + " partition holds fewer C-Buffers than the level above it");
    }
    const std::uint64_t r = std::bit_ceil(std::max<std::uint64_t>(1, (index_range + y - 1) / y));
    cfg.partition_bytes.push_back(bytes);
    cfg.buffers.push_back(y);
    cfg.bin_ranges.push_back(static_cast<std::uint32_t>(r));
  }
  const std::uint64_t locality_budget = levels.front().capacity_bytes;
  if (std::uint64_t{cfg.bin_ranges.back()} * sizeof(offset_t) > locality_budget) {
    cfg.warnings.push_back("last-level bin range " + std::to_string(cfg.bin_ranges.back()) +
                           " exceeds the bin-read locality budget of " + levels.front().name);
  }
  cfg.check();
  return cfg;
}

CBufferHierarchy::CBufferHierarchy(const CobraConfig& cfg, const CostModel& cost)
    : cfg_(cfg), cost_(cost) {
  cfg_.check();
  const std::size_t n = cfg_.num_levels();
  const std::uint32_t capacity = cfg_.buffer_capacity();
  for (std::size_t l = 0; l < n; ++l) {
    shifts_.push_back(static_cast<unsigned>(std::countr_zero(cfg_.bin_ranges[l])));
    storage_.emplace_back(cfg_.used_buffers(l) * capacity);
    occupancy_.emplace_back(cfg_.used_buffers(l), 0);
  }
  queues_.resize(n);
  engine_free_at_.assign(n, 0);
  memory_bins_.resize(cfg_.num_memory_bins());
  evictions_.assign(n, 0);
  partition_accesses_.assign(n, 0);
  max_fanout_.assign(n, 0);
}

std::uint64_t CBufferHierarchy::service_cycles(std::size_t boundary, std::size_t tuples) const {
  if (boundary + 1 == cfg_.num_levels()) return cost_.stream_write_cycles;
  return cost_.latency_at(boundary + 1) + tuples * cost_.engine_tuple_cycles;
}

std::uint64_t CBufferHierarchy::head_ready(std::size_t boundary) const {
  const Eviction& head = queues_[boundary].front();
  return std::max(head.enqueued_at, engine_free_at_[boundary]) +
         service_cycles(boundary, head.tuples.size());
}

bool CBufferHierarchy::push(std::size_t level, UpdateTuple t) {
  const std::uint64_t buffer = t.index >> shifts_[level];
  const std::uint32_t capacity = cfg_.buffer_capacity();
  storage_[level][buffer * capacity + occupancy_[level][buffer]] = t;
  ++partition_accesses_[level];
  return ++occupancy_[level][buffer] == capacity;
}

std::uint64_t CBufferHierarchy::enqueue(std::size_t level, std::uint64_t buffer, std::uint64_t now) {
  drain_level(level, now);
  while (queues_[level].size() >= cfg_.eviction_buffer_depth) {
    now = std::max(now, complete_head(level));
  }
  const std::uint32_t capacity = cfg_.buffer_capacity();
  auto first = storage_[level].begin() + static_cast<std::ptrdiff_t>(buffer * capacity);
  queues_[level].push_back({{first, first + occupancy_[level][buffer]}, now});
  occupancy_[level][buffer] = 0;
  ++evictions_[level];
  return now;
}

std::uint64_t CBufferHierarchy::complete_head(std::size_t boundary) {
  const std::uint64_t ready = head_ready(boundary);
  Eviction ev = std::move(queues_[boundary].front());
  queues_[boundary].pop_front();
  engine_cycles_ += service_cycles(boundary, ev.tuples.size());
  engine_free_at_[boundary] = ready;

  if (boundary + 1 == cfg_.num_levels()) {
    // One LLC buffer covers exactly one memory bin.
    const std::uint64_t bin = ev.tuples.front().index >> shifts_[boundary];
    auto& dest = memory_bins_[bin];
    dest.insert(dest.end(), ev.tuples.begin(), ev.tuples.end());
    if (memory_write_) memory_write_(bin, ev.tuples);
    return ready;
  }

  const std::size_t next = boundary + 1;
  std::uint64_t t = ready;
  std::uint64_t targets[64];
  std::size_t distinct = 0;
  for (const UpdateTuple& tuple : ev.tuples) {
    const std::uint64_t buffer = tuple.index >> shifts_[next];
    if (std::find(targets, targets + distinct, buffer) == targets + distinct && distinct < 64) {
      targets[distinct++] = buffer;
    }
    if (push(next, tuple)) t = enqueue(next, buffer, t);
  }
  max_fanout_[boundary] = std::max<std::uint64_t>(max_fanout_[boundary], distinct);
  // Backpressure from the next boundary delays this engine.
  engine_free_at_[boundary] = std::max(engine_free_at_[boundary], t);
  return ready;
}

void CBufferHierarchy::drain_level(std::size_t boundary, std::uint64_t now) {
  while (!queues_[boundary].empty() && head_ready(boundary) <= now) complete_head(boundary);
}

void CBufferHierarchy::drain_all(std::size_t boundary) {
  while (!queues_[boundary].empty()) complete_head(boundary);
}

void CBufferHierarchy::advance(std::uint64_t now) {
  for (std::size_t b = 0; b < queues_.size(); ++b) drain_level(b, now);
}

std::uint64_t CBufferHierarchy::binupd(UpdateTuple t, std::uint64_t now) {
  if (t.index >= cfg_.index_range) {
    throw std::out_of_range("binupd index " + std::to_string(t.index) + " outside the index range");
  }
  advance(now);
  ++submitted_;
  if (push(0, t)) return enqueue(0, t.index >> shifts_[0], now);
  return now;
}

std::uint64_t CBufferHierarchy::flush(std::uint64_t now) {
  advance(now);
  for (std::size_t level = 0; level < cfg_.num_levels(); ++level) {
    for (std::size_t above = 0; above < level; ++above) drain_all(above);
    for (std::uint64_t b = 0; b < occupancy_[level].size(); ++b) {
      if (occupancy_[level][b] > 0) now = enqueue(level, b, now);
    }
  }
  for (std::size_t b = 0; b < queues_.size(); ++b) drain_all(b);
  return std::max(now, *std::max_element(engine_free_at_.begin(), engine_free_at_.end()));
}

std::uint64_t CBufferHierarchy::tuples_in_buffers() const {
  std::uint64_t total = 0;
  for (const auto& level : occupancy_) {
    for (std::uint32_t occ : level) total += occ;
  }
  return total;
}

std::uint64_t CBufferHierarchy::tuples_in_eviction_buffers() const {
  std::uint64_t total = 0;
  for (const auto& q : queues_) {
    for (const Eviction& e : q) total += e.tuples.size();
  }
  return total;
}

std::uint64_t CBufferHierarchy::tuples_in_memory() const {
  std::uint64_t total = 0;
  for (const auto& bin : memory_bins_) total += bin.size();
  return total;
}

std::string CBufferHierarchy::audit() const {
  const std::uint64_t placed = tuples_in_buffers() + tuples_in_eviction_buffers() + tuples_in_memory();
  if (placed != submitted_) {
    return "conservation: " + std::to_string(placed) + " placed vs " + std::to_string(submitted_) +
           " submitted";
  }
  const std::uint32_t capacity = cfg_.buffer_capacity();
  for (std::size_t l = 0; l < occupancy_.size(); ++l) {
    for (std::uint64_t b = 0; b < occupancy_[l].size(); ++b) {
      if (occupancy_[l][b] > capacity) return "level " + std::to_string(l) + " buffer overfull";
      for (std::uint32_t i = 0; i < occupancy_[l][b]; ++i) {
        if ((storage_[l][b * capacity + i].index >> shifts_[l]) != b) {
          return "level " + std::to_string(l) + " buffer " + std::to_string(b) + " holds a foreign tuple";
        }
      }
    }
  }
  for (std::size_t l = 0; l < queues_.size(); ++l) {
    for (const Eviction& e : queues_[l]) {
      if (e.tuples.empty()) return "empty eviction at boundary " + std::to_string(l);
      const std::uint64_t owner = e.tuples.front().index >> shifts_[l];
      for (const UpdateTuple& t : e.tuples) {
        if ((t.index >> shifts_[l]) != owner) return "mixed eviction at boundary " + std::to_string(l);
      }
    }
  }
  const unsigned last = shifts_.back();
  for (std::uint64_t b = 0; b < memory_bins_.size(); ++b) {
    for (const UpdateTuple& t : memory_bins_[b]) {
      if ((t.index >> last) != b) return "memory bin " + std::to_string(b) + " holds a foreign tuple";
    }
  }
  return {};
}

CobraBinner::CobraBinner(sim::Simulator& sim, const CobraConfig& cfg, sim::BinLayout memory_bins)
    : sim_(sim),
      hierarchy_(cfg, sim.cost()),
      cursor_(memory_bins.start.begin(), memory_bins.start.end() - 1) {
  if (cursor_.size() != cfg.num_memory_bins()) {
    throw std::invalid_argument("memory bin layout does not match the cobra config");
  }
  hierarchy_.on_memory_write([this](std::uint64_t bin, std::span<const UpdateTuple> tuples) {
    const auto bytes = static_cast<std::uint16_t>(tuples.size() * sizeof(UpdateTuple));
    sim_.access({sim::AccessKind::stream_write, cursor_[bin], bytes});
    cursor_[bin] += sim_.line_size();
  });
}

void CobraBinner::update(UpdateTuple t) {
  sim_.ops(sim_.cost().binupd_ops);
  sim_.charge(sim_.cost().latency_at(0));
  const std::uint64_t now = sim_.stats().cycles;
  const std::uint64_t resume = hierarchy_.binupd(t, now);
  if (resume > now) {
    sim_.stats().stall_cycles += resume - now;
    sim_.charge(resume - now);
  }
}

sim::PartitionedUpdates CobraBinner::finish() {
  const std::uint64_t now = sim_.stats().cycles;
  const std::uint64_t done = hierarchy_.flush(now);
  if (done > now) sim_.charge(done - now);
  auto& stats = sim_.stats();
  for (std::size_t l = 0; l < stats.levels.size() && l < hierarchy_.config().num_levels(); ++l) {
    stats.levels[l].partition_accesses += hierarchy_.partition_accesses(l);
    stats.levels[l].cbuffer_evictions += hierarchy_.evictions(l);
  }
  stats.engine_cycles += hierarchy_.engine_cycles();
  return sim::PartitionedUpdates::from_bins(hierarchy_.memory_bins());
}

namespace {

std::vector<std::uint64_t> key_counts(std::span<const UpdateTuple> updates, unsigned shift,
                                      std::uint64_t num_bins) {
  std::vector<std::uint64_t> counts(num_bins, 0);
  for (const UpdateTuple& t : updates) ++counts[t.index >> shift];
  return counts;
}

}  // namespace

CobraBinningResult simulate_binning_cobra(std::span<const UpdateTuple> updates,
                                          const CobraConfig& cfg,
                                          std::span<const sim::CacheLevelConfig> levels,
                                          const CostModel& cost) {
  sim::Simulator sim({levels.begin(), levels.end()}, cost);
  sim::AddressSpace space;
  const sim::Region input = space.allocate(updates.size() * sizeof(UpdateTuple));
  const auto counts = key_counts(updates, static_cast<unsigned>(std::countr_zero(cfg.memory_bin_range())),
                                 cfg.num_memory_bins());
  const sim::Region bins = space.allocate(sim::BinLayout::from_counts(counts, 0, cfg.line_size).end());

  CobraBinner binner(sim, cfg, sim::BinLayout::from_counts(counts, bins.base, cfg.line_size));
  for (std::size_t i = 0; i < updates.size(); ++i) {
    sim.event({sim::AccessKind::read, input.at(i, sizeof(UpdateTuple)), sizeof(UpdateTuple)});
    binner.update(updates[i]);
  }
  binner.finish();
  return {sim.stats(), binner.hierarchy().memory_bins()};
}

sim::SimStats simulate_binning_software(std::span<const UpdateTuple> updates, const PbConfig& cfg,
                                        std::span<const sim::CacheLevelConfig> levels,
                                        const CostModel& cost) {
  sim::Simulator sim({levels.begin(), levels.end()}, cost);
  sim::AddressSpace space;
  const sim::Region input = space.allocate(updates.size() * sizeof(UpdateTuple));
  const sim::Region buffers = space.allocate(cfg.num_bins() * cfg.line_size);
  const auto counts = key_counts(updates, cfg.bin_shift(), cfg.num_bins());
  const sim::Region bins = space.allocate(sim::BinLayout::from_counts(counts, 0, cfg.line_size).end());

  sim::SoftwareBinner binner(sim, cfg, buffers,
                             sim::BinLayout::from_counts(counts, bins.base, cfg.line_size), cost);
  for (std::size_t i = 0; i < updates.size(); ++i) {
    sim.event({sim::AccessKind::read, input.at(i, sizeof(UpdateTuple)), sizeof(UpdateTuple)});
    binner.update(updates[i]);
  }
  binner.finish();
  return sim.stats();
}

}  // namespace pbkit::cobra
