#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pbkit/cache_sim.hpp"
#include "pbkit/cobra.hpp"
#include "pbkit/graph.hpp"

namespace pbkit::sim {

enum class Workload {
  /// Edgelist-to-CSR neighbor population (offsets precomputed).
  neighpop,
  /// PageRank on prebuilt CSR/CSC.
  pagerank,
  /// PageRank computed directly on the edge list.
  edgelist_pagerank,
  /// Degree count + prefix sum + neighbor population + PageRank.
  end_to_end,
};

enum class Mode { baseline, pb, pb_ideal, cobra };

std::string_view to_string(Workload w);
std::string_view to_string(Mode m);
Workload parse_workload(std::string_view s);
Mode parse_mode(std::string_view s);

struct PipelineConfig {
  std::vector<CacheLevelConfig> levels = default_hierarchy();
  CostModel cost;
  /// Share of each level's ways pinned for C-Buffers during COBRA binning.
  double partition_fraction = 0.25;
  std::uint32_t eviction_buffer_depth = 4;
  /// Software PB bin range; 0 means one bin covering every vertex.
  std::uint32_t bin_range = 0;
  /// PageRank bin range in end_to_end runs; 0 reuses bin_range.
  std::uint32_t pagerank_bin_range = 0;
  /// Candidate bin ranges for pb_ideal.
  std::vector<std::uint32_t> sweep_bin_ranges;
  int pagerank_iters = 20;
  /// PageRank iterations actually simulated; later iterations repeat the
  /// same address trace and are charged as copies of the last simulated one.
  int simulated_iters = 2;
};

struct PhaseStats {
  std::string name;
  std::uint32_t bin_range = 0;
  SimStats stats;
};

struct PipelineResult {
  Workload workload = Workload::neighpop;
  Mode mode = Mode::baseline;
  std::vector<PhaseStats> phases;
  std::optional<cobra::CobraConfig> cobra;

  SimStats total() const;
  /// Sum of the phases whose name contains the given fragment.
  SimStats phase_total(std::string_view fragment) const;
};

PipelineResult simulate_pipeline(const EdgeList& el, Workload workload, Mode mode,
                                 const PipelineConfig& cfg);

struct SweepPoint {
  std::uint32_t bin_range = 0;
  SimStats binning;
  SimStats binread;
  SimStats total() const {
    SimStats s = binning;
    s += binread;
    return s;
  }
};

/// Software PB at each bin range (neighpop or pagerank), cold caches per point.
std::vector<SweepPoint> sweep_bin_ranges(const EdgeList& el, Workload workload,
                                         std::span<const std::uint32_t> bin_ranges,
                                         const PipelineConfig& cfg);

/// Index of the sweep point with the lowest total cycles.
std::size_t best_sweep_point(std::span<const SweepPoint> sweep);

/// Powers of two 2^lo .. 2^hi inclusive.
std::vector<std::uint32_t> power_of_two_range(unsigned lo, unsigned hi);

}  // namespace pbkit::sim
