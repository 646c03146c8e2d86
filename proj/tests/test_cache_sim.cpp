#include <doctest.h>

#include <list>
#include <random>
#include <sstream>

#include "pbkit/cache_sim.hpp"
#include "pbkit/error.hpp"
#include "pbkit/trace_gen.hpp"

using namespace pbkit;
using namespace pbkit::sim;

namespace {

CacheLevelConfig level(const char* name, std::uint64_t cap, std::uint32_t assoc) {
  return {name, cap, assoc, 64, 0};
}

void check_chaining(const SimStats& s) {
  for (std::size_t i = 0; i + 1 < s.levels.size(); ++i) {
    REQUIRE(s.levels[i + 1].accesses() == s.levels[i].misses);
  }
  REQUIRE(s.dram_reads == s.levels.back().misses);
}

// Reference LRU over whole lines for a fully associative cache.
std::uint64_t lru_misses(std::span<const MemEvent> events, std::size_t lines) {
  std::list<std::uint64_t> order;
  std::uint64_t misses = 0;
  for (const MemEvent& e : events) {
    const std::uint64_t line = e.address / 64;
    auto it = std::find(order.begin(), order.end(), line);
    if (it != order.end()) {
      order.erase(it);
    } else {
      ++misses;
      if (order.size() == lines) order.pop_back();
    }
    order.push_front(line);
  }
  return misses;
}

std::vector<MemEvent> random_trace(std::mt19937_64& rng, std::size_t n, std::uint64_t lines) {
  std::vector<MemEvent> t(n);
  for (auto& e : t) {
    e.kind = rng() % 3 == 0 ? AccessKind::write : AccessKind::read;
    e.address = (rng() % lines) * 64 + (rng() % 8) * 8;
    e.size = 8;
  }
  return t;
}

}  // namespace

TEST_CASE("level config invariants") {
  CHECK_NOTHROW(level("L1", 32768, 8).check());
  CHECK_THROWS_AS(level("L1", 1000, 8).check(), std::invalid_argument);
  auto reserved = level("L1", 32768, 8);
  reserved.reserved_ways = 8;
  CHECK_THROWS_AS(reserved.check(), std::invalid_argument);
  reserved.reserved_ways = 2;
  CHECK(reserved.partition_bytes() == 8192);

  const auto h = default_hierarchy();
  REQUIRE(h.size() == 3);
  CHECK(h[0].capacity_bytes == 32 * 1024);
  CHECK(h[1].capacity_bytes == 256 * 1024);
  CHECK(h[2].capacity_bytes == 2 * 1024 * 1024);
  CHECK(h[2].associativity == 16);
  const auto p = with_partitions(h, 0.25);
  CHECK(p[0].reserved_ways == 2);
  CHECK(p[2].reserved_ways == 4);
}

TEST_CASE("cold read misses everywhere") {
  const std::vector<MemEvent> t{{AccessKind::read, 4096, 8}};
  const SimStats s = simulate_trace(t, default_hierarchy());
  for (const auto& l : s.levels) CHECK(l.misses == 1);
  CHECK(s.dram_reads == 1);
  CHECK(s.dram_lines() == 1);
  CHECK(s.cycles == 200);
}

TEST_CASE("repeat read hits L1") {
  const std::vector<MemEvent> t{{AccessKind::read, 4096, 8}, {AccessKind::read, 4100, 4}};
  const SimStats s = simulate_trace(t, default_hierarchy());
  CHECK(s.levels[0].hits == 1);
  CHECK(s.cycles == 204);
}

TEST_CASE("second pass over a fitting scan hits L1") {
  std::vector<MemEvent> pass;
  for (std::uint64_t i = 0; i < 256; ++i) pass.push_back({AccessKind::read, i * 64, 8});
  std::vector<MemEvent> twice = pass;
  twice.insert(twice.end(), pass.begin(), pass.end());
  const SimStats s = simulate_trace(twice, default_hierarchy());
  CHECK(s.levels[0].misses == 256);
  CHECK(s.levels[0].hits == 256);
}

TEST_CASE("line-crossing events touch both lines") {
  const std::vector<MemEvent> t{{AccessKind::read, 60, 8}};
  const SimStats s = simulate_trace(t, default_hierarchy());
  CHECK(s.levels[0].misses == 2);
}

TEST_CASE("malformed events") {
  const std::vector<MemEvent> big{{AccessKind::read, 0, 65}};
  CHECK_THROWS_AS(simulate_trace(big, default_hierarchy()), std::invalid_argument);
  const std::vector<MemEvent> empty{{AccessKind::read, 0, 0}};
  CHECK_THROWS_AS(simulate_trace(empty, default_hierarchy()), std::invalid_argument);
}

TEST_CASE("stream writes bypass and invalidate") {
  const std::vector<MemEvent> t{{AccessKind::read, 0, 8},
                                {AccessKind::stream_write, 0, 64},
                                {AccessKind::read, 0, 8}};
  const SimStats s = simulate_trace(t, default_hierarchy());
  CHECK(s.stream_write_lines == 1);
  CHECK(s.levels[0].misses == 2);
  CHECK(s.dram_lines() == 3);
}

TEST_CASE("dirty victims are written back") {
  // One-set, two-way L1 over a DRAM-only backing.
  const std::vector<CacheLevelConfig> tiny{level("L1", 128, 2)};
  const std::vector<MemEvent> t{{AccessKind::write, 0, 8},
                                {AccessKind::read, 64, 8},
                                {AccessKind::read, 128, 8}};
  const SimStats s = simulate_trace(t, tiny);
  CHECK(s.levels[0].writebacks == 1);
  CHECK(s.dram_writebacks == 1);
  CHECK(s.dram_lines() == 4);
}

TEST_CASE("level chaining and determinism on random traces") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const auto t = random_trace(rng, 20000, 1u << (8 + trial % 10));
    const SimStats a = simulate_trace(t, default_hierarchy());
    check_chaining(a);
    CHECK(a == simulate_trace(t, default_hierarchy()));
  }
}

TEST_CASE("fully associative LRU matches a reference and keeps inclusion") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const auto t = random_trace(rng, 3000, 64 + rng() % 400);
    std::uint64_t prev = ~0ull;
    for (std::uint32_t lines : {4u, 8u, 16u, 32u, 64u, 128u}) {
      const std::vector<CacheLevelConfig> fa{level("FA", lines * 64ull, lines)};
      const std::uint64_t misses = simulate_trace(t, fa).levels[0].misses;
      REQUIRE(misses == lru_misses(t, lines));
      REQUIRE(misses <= prev);
      prev = misses;
    }
  }
}

TEST_CASE("reserved ways shrink usable capacity") {
  Simulator sim({level("L1", 64 * 8, 8)});
  for (std::uint64_t i = 0; i < 8; ++i) sim.event({AccessKind::write, i * 64, 8});
  sim.set_reserved_ways(0, 6);
  CHECK(sim.stats().dram_writebacks == 6);
  const auto before = sim.stats().levels[0].hits;
  sim.event({AccessKind::read, 7 * 64, 8});  // most recent line survives
  CHECK(sim.stats().levels[0].hits == before + 1);
  sim.event({AccessKind::read, 0, 8});
  CHECK(sim.stats().levels[0].misses == 9);
}

TEST_CASE("trace binary round-trip") {
  std::mt19937_64 rng(3);
  auto t = random_trace(rng, 500, 1000);
  t.push_back({AccessKind::stream_write, 1ull << 40, 64});
  std::stringstream buf;
  write_trace(buf, t);
  CHECK(buf.str().size() == 4 + t.size() * 11);
  CHECK(read_trace(buf) == t);

  std::stringstream bad("XXXX");
  CHECK_THROWS_WITH_AS(read_trace(bad), "bad magic", FormatError);
  std::stringstream cut(buf.str().substr(0, 4 + 11 * 3 + 5));
  CHECK_THROWS_AS(read_trace(cut), FormatError);
}

TEST_CASE("trace_of_binning") {
  const PbConfig cfg = PbConfig::make(64, 64);
  std::vector<UpdateTuple> u(8, UpdateTuple{3, 1});
  AddressSpace space;
  const auto layout = make_binning_layout(space, u, cfg);
  const auto trace = trace_of_binning(u, cfg, layout);
  std::size_t flushes = 0;
  for (const auto& e : trace) flushes += e.kind == AccessKind::stream_write;
  CHECK(flushes == 1);
  CHECK(trace.size() == 8 * 3 + 1);
}

TEST_CASE("binning buffers hit when they fit and miss when they do not") {
  auto buffer_misses = [](std::uint64_t bins) {
    const std::uint64_t range = bins * 16;
    const PbConfig cfg = PbConfig::make(range, 16);
    std::vector<UpdateTuple> u;
    for (int round = 0; round < 64; ++round) {
      for (std::uint64_t b = 0; b < bins; ++b) u.push_back({static_cast<std::uint32_t>(b * 16), 0});
    }
    AddressSpace space;
    const auto layout = make_binning_layout(space, u, cfg);
    const auto trace = trace_of_binning(u, cfg, layout);
    // Count buffer-line misses after the first round with a one-level L1.
    Simulator sim({level("L1", 32768, 8)});
    std::uint64_t misses = 0;
    std::size_t seen = 0;
    for (const auto& e : trace) {
      const bool is_buffer = e.address >= layout.buffers.base &&
                             e.address < layout.buffers.base + layout.buffers.bytes;
      const auto before = sim.stats().levels[0].misses;
      sim.event(e);
      if (is_buffer && ++seen > 2 * bins) misses += sim.stats().levels[0].misses - before;
    }
    return misses;
  };
  CHECK(buffer_misses(64) == 0);
  CHECK(buffer_misses(4096) > 0);
}

TEST_CASE("trace_of_binread") {
  const EdgeList el{64, {}};
  std::vector<UpdateTuple> u;
  std::mt19937_64 rng(1);
  for (int i = 0; i < 4000; ++i) u.push_back({static_cast<std::uint32_t>(rng() % 4096), 0});
  const PbConfig small = PbConfig::make(4096, 64);
  const auto bins = partition_updates(u, small);
  std::vector<offset_t> offsets(4097);
  std::vector<offset_t> deg(4096, 0);
  for (const auto& t : u) ++deg[t.index];
  for (std::size_t i = 0; i < 4096; ++i) offsets[i + 1] = offsets[i] + deg[i];

  AddressSpace space;
  const auto layout = make_binread_layout(space, bins, 4096, u.size());
  const auto trace = trace_of_binread(bins, small, layout, offsets);
  CHECK(trace.size() == small.num_bins() + 4 * u.size());

  // Irregular accesses hit in L1 apart from first touches of each line.
  Simulator sim({level("L1", 32768, 8)});
  std::uint64_t irregular_misses = 0;
  for (const auto& e : trace) {
    const bool irregular = e.address >= layout.offsets.base && e.address < layout.neighbors.base + layout.neighbors.bytes;
    const auto before = sim.stats().levels[0].misses;
    sim.event(e);
    if (irregular) irregular_misses += sim.stats().levels[0].misses - before;
  }
  const std::uint64_t distinct_lines = (4097 * 8 + 63) / 64 + (u.size() * 4 + 63) / 64;
  CHECK(irregular_misses <= distinct_lines + small.num_bins());

  const auto empty = partition_updates({}, small);
  const auto only_meta = trace_of_binread(empty, small, layout, offsets);
  CHECK(only_meta.size() == small.num_bins());
  for (const auto& e : only_meta) CHECK(e.address < layout.bin_meta.base + layout.bin_meta.bytes);

  CHECK_THROWS_AS(trace_of_binread(bins, PbConfig::make(4096, 128), layout, offsets), std::invalid_argument);
}

TEST_CASE("single bin bin-read reproduces the baseline irregular pattern") {
  std::mt19937_64 rng(2);
  EdgeList el{512, {}};
  for (int i = 0; i < 3000; ++i) el.edges.push_back({static_cast<vertex_t>(rng() % 512), static_cast<vertex_t>(rng() % 512)});
  std::vector<UpdateTuple> u;
  for (const auto& e : el.edges) u.push_back({e.src, e.dst});
  const PbConfig one = PbConfig::make(512, 512);
  const auto bins = partition_updates(u, one);
  std::vector<offset_t> deg(512, 0);
  for (const auto& e : el.edges) ++deg[e.src];
  std::vector<offset_t> offsets(513, 0);
  for (std::size_t i = 0; i < 512; ++i) offsets[i + 1] = offsets[i] + deg[i];

  AddressSpace space;
  const auto layout = make_binread_layout(space, bins, 512, u.size());
  const auto binread = trace_of_binread(bins, one, layout, offsets);
  TraceRecorder base;
  emit_neighpop_baseline(base, el, {layout.bins, layout.offsets, layout.neighbors}, offsets, false, {});
  // Same offsets/neighbors accesses in the same order, the bin replacing the edge stream.
  std::vector<MemEvent> a, b;
  for (const auto& e : binread) if (e.address >= layout.offsets.base) a.push_back(e);
  for (const auto& e : base.events) if (e.address >= layout.offsets.base) b.push_back(e);
  CHECK(a == b);
}
