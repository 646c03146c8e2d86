#include <doctest.h>

#include <random>

#include "pbkit/cobra.hpp"

using namespace pbkit;
using namespace pbkit::cobra;
using pbkit::sim::CacheLevelConfig;

namespace {

// A level whose reserved ways hold exactly `buffers` lines.
CacheLevelConfig partitioned(const char* name, std::uint64_t buffers, std::uint32_t assoc = 8) {
  CacheLevelConfig c{name, buffers * 64 * assoc, assoc, 64, 1};
  return c;
}

std::vector<CacheLevelConfig> levels_with(std::initializer_list<std::uint64_t> ys) {
  std::vector<CacheLevelConfig> out;
  const char* names[] = {"L1", "L2", "LLC", "L4"};
  std::size_t i = 0;
  for (std::uint64_t y : ys) out.push_back(partitioned(names[i++], y));
  return out;
}

std::vector<UpdateTuple> random_updates(std::mt19937_64& rng, std::size_t n, std::uint64_t range) {
  std::vector<UpdateTuple> u(n);
  for (auto& t : u) t = {static_cast<std::uint32_t>(rng() % range), static_cast<std::uint32_t>(rng())};
  return u;
}

std::vector<std::vector<UpdateTuple>> sorted_bins(std::vector<std::vector<UpdateTuple>> bins) {
  for (auto& b : bins) std::sort(b.begin(), b.end());
  return bins;
}

std::vector<std::vector<UpdateTuple>> software_bins(std::span<const UpdateTuple> u, std::uint64_t range,
                                                    std::uint32_t bin_range) {
  const auto r = binning_phase(u, PbConfig::make(range, bin_range));
  std::vector<std::vector<UpdateTuple>> out;
  for (std::uint64_t b = 0; b < r.bins.num_bins(); ++b) out.push_back(r.bins.at(0, b).to_vector());
  return out;
}

}  // namespace

TEST_CASE("derive_level_bin_ranges examples") {
  // Y = (64, 512, 4096) over 2^20 indices.
  std::vector<CacheLevelConfig> lv{{"L1", 32768, 8, 64, 1}, {"L2", 262144, 8, 64, 1}, {"LLC", 2097152, 16, 64, 2}};
  const CobraConfig c = derive_level_bin_ranges(1u << 20, lv);
  CHECK(c.buffers == std::vector<std::uint64_t>{64, 512, 4096});
  CHECK(c.bin_ranges == std::vector<std::uint32_t>{16384, 2048, 256});

  const auto single = derive_level_bin_ranges(100, levels_with({128}));
  CHECK(single.bin_ranges == std::vector<std::uint32_t>{1});

  const auto shaped = derive_level_bin_ranges(1u << 14, levels_with({64, 128, 1024}));
  REQUIRE(shaped.bin_ranges.size() == 3);
  CHECK(shaped.bin_ranges[0] == 16 * shaped.bin_ranges[2]);
  CHECK(shaped.bin_ranges[1] == 8 * shaped.bin_ranges[2]);

  const auto def = derive_level_bin_ranges(1u << 18, sim::with_partitions(sim::default_hierarchy(), 0.25));
  CHECK(def.buffers == std::vector<std::uint64_t>{128, 1024, 8192});
  CHECK(def.bin_ranges == std::vector<std::uint32_t>{2048, 256, 32});
  CHECK(def.warnings.empty());
}

TEST_CASE("derive_level_bin_ranges errors and warnings") {
  CHECK_THROWS_AS(derive_level_bin_ranges(1000, sim::default_hierarchy()), std::invalid_argument);
  CHECK_THROWS_AS(derive_level_bin_ranges(1000, levels_with({512, 64})), std::invalid_argument);
  // A tiny LLC partition forces a last-level range past the L1 locality budget.
  const auto warned = derive_level_bin_ranges(1u << 24, levels_with({8, 8, 8}));
  CHECK_FALSE(warned.warnings.empty());
}

TEST_CASE("binupd fills then evicts one L1 buffer") {
  const auto cfg = derive_level_bin_ranges(1024, levels_with({16, 32, 64}));
  CBufferHierarchy h(cfg);
  h.binupd({5, 0}, 0);
  CHECK(h.occupancy(0, 5 / cfg.bin_ranges[0]) == 1);
  CHECK(h.pending_evictions(0) == 0);
  for (std::uint32_t i = 1; i < cfg.buffer_capacity(); ++i) h.binupd({5, i}, 0);
  CHECK(h.pending_evictions(0) == 1);
  CHECK(h.evictions(0) == 1);
  CHECK(h.occupancy(0, 5 / cfg.bin_ranges[0]) == 0);
  CHECK(h.audit().empty());
}

TEST_CASE("eviction scatter follows next-level ranges") {
  const auto cfg = derive_level_bin_ranges(1024, levels_with({16, 32, 64}));
  REQUIRE(cfg.bin_ranges == std::vector<std::uint32_t>{64, 32, 16});
  {
    CBufferHierarchy h(cfg);
    for (std::uint32_t i = 0; i < 8; ++i) h.binupd({3, i}, 0);
    h.advance(1'000'000);
    CHECK(h.max_fanout(0) == 1);
  }
  {
    CBufferHierarchy h(cfg);
    for (std::uint32_t i = 0; i < 8; ++i) h.binupd({i % 2 == 0 ? 3u : 40u, i}, 0);
    h.advance(1'000'000);
    CHECK(h.max_fanout(0) == 2);
    CHECK(h.occupancy(1, 0) == 4);
    CHECK(h.occupancy(1, 1) == 4);
  }
}

TEST_CASE("conservation and fan-out hold at every step") {
  std::mt19937_64 rng(9);
  for (auto ys : {std::vector<std::uint64_t>{16, 32, 64}, {8, 64, 512}, {4, 4, 4}, {32}}) {
    std::vector<CacheLevelConfig> lv;
    for (std::size_t i = 0; i < ys.size(); ++i) lv.push_back(partitioned(i == 0 ? "L1" : "Lx", ys[i]));
    const std::uint64_t range = 1 + rng() % 4000;
    const auto cfg = derive_level_bin_ranges(range, lv, 2);
    CBufferHierarchy h(cfg);
    std::uint64_t now = 0;
    for (const auto& t : random_updates(rng, 3000, range)) {
      now = h.binupd(t, now) + 1;
      REQUIRE(h.audit().empty());
    }
    h.flush(now);
    REQUIRE(h.audit().empty());
    CHECK(h.tuples_in_buffers() == 0);
    CHECK(h.tuples_in_eviction_buffers() == 0);
    CHECK(h.tuples_in_memory() == 3000);
    for (std::size_t l = 0; l + 1 < cfg.num_levels(); ++l) {
      CHECK(h.max_fanout(l) <= cfg.bin_ranges[l] / cfg.bin_ranges[l + 1]);
    }
  }
}

TEST_CASE("memory bins equal software bins at the last-level range") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const std::uint64_t range = 1 + rng() % 20000;
    const auto cfg = derive_level_bin_ranges(range, levels_with({8, 32, 256}));
    const auto u = random_updates(rng, 5000, range);
    const auto r = simulate_binning_cobra(u, cfg, levels_with({8, 32, 256}));
    CHECK(sorted_bins(r.memory_bins) == sorted_bins(software_bins(u, range, cfg.memory_bin_range())));
  }
}

TEST_CASE("cobra binning costs one instruction per update") {
  std::mt19937_64 rng(4);
  const std::uint64_t range = 1u << 16;
  const auto levels = sim::with_partitions(sim::default_hierarchy(), 0.25);
  const auto cfg = derive_level_bin_ranges(range, levels);
  const auto u = random_updates(rng, 200000, range);
  const auto r = simulate_binning_cobra(u, cfg, levels);
  CHECK(r.stats.instructions == u.size());

  const auto sw = simulate_binning_software(u, PbConfig::make(range, cfg.memory_bin_range()),
                                            sim::default_hierarchy());
  CHECK(sw.instructions >= 2 * u.size());
  CHECK(r.stats.cycles < sw.cycles);
}

TEST_CASE("fully resident single level only writes memory bins") {
  const auto lv = levels_with({256});
  const auto cfg = derive_level_bin_ranges(200, lv);
  REQUIRE(cfg.bin_ranges == std::vector<std::uint32_t>{1});
  std::mt19937_64 rng(8);
  const auto u = random_updates(rng, 4000, 200);
  const auto r = simulate_binning_cobra(u, cfg, lv);
  CHECK(r.stats.levels.size() == 1);
  CHECK(r.stats.levels[0].cbuffer_evictions == r.stats.stream_write_lines);
}

TEST_CASE("one-index buffers cascade whole") {
  const auto lv = levels_with({64, 128, 256});
  const auto cfg = derive_level_bin_ranges(64, lv);
  REQUIRE(cfg.bin_ranges == std::vector<std::uint32_t>{1, 1, 1});
  CBufferHierarchy h(cfg);
  std::mt19937_64 rng(1);
  std::uint64_t now = 0;
  for (const auto& t : random_updates(rng, 2000, 64)) now = h.binupd(t, now) + 1;
  h.flush(now);
  CHECK(h.max_fanout(0) == 1);
  CHECK(h.max_fanout(1) == 1);
  // Every L1 eviction becomes exactly one L2 and one LLC eviction.
  CHECK(h.evictions(1) == h.evictions(0));
  CHECK(h.evictions(2) == h.evictions(0));
}

TEST_CASE("shallow eviction buffers stall more") {
  std::mt19937_64 rng(12);
  const auto levels = sim::with_partitions(sim::default_hierarchy(), 0.25);
  const auto u = random_updates(rng, 100000, 1u << 18);
  std::uint64_t prev = ~0ull;
  for (std::uint32_t depth : {1u, 4u, 64u}) {
    const auto cfg = derive_level_bin_ranges(1u << 18, levels, depth);
    const auto r = simulate_binning_cobra(u, cfg, levels);
    CHECK(r.stats.stall_cycles <= prev);
    prev = r.stats.stall_cycles;
    CHECK(r.stats.instructions == u.size());
  }
}

TEST_CASE("cobra simulation is deterministic") {
  std::mt19937_64 rng(2);
  const auto levels = sim::with_partitions(sim::default_hierarchy(), 0.25);
  const auto cfg = derive_level_bin_ranges(50000, levels);
  const auto u = random_updates(rng, 30000, 50000);
  const auto a = simulate_binning_cobra(u, cfg, levels);
  const auto b = simulate_binning_cobra(u, cfg, levels);
  CHECK(a.stats == b.stats);
  CHECK(a.memory_bins == b.memory_bins);
}

TEST_CASE("binupd rejects indices outside the range") {
  const auto cfg = derive_level_bin_ranges(100, levels_with({8}));
  CBufferHierarchy h(cfg);
  CHECK_THROWS_AS(h.binupd({100, 0}, 0), std::out_of_range);
}
