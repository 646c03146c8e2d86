#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pbkit/cache_sim.hpp"
#include "pbkit/graph.hpp"
#include "pbkit/pipeline.hpp"

namespace pbkit::io {

// --- graphs ------------------------------------------------------------------

/// Whitespace-separated "src dst" per line; '#' and '%' lines and blank lines
/// are skipped. num_vertices defaults to 1 + the largest id.
/// Throws FormatError("line N: ...") on malformed lines or ids that do not fit.
EdgeList parse_edgelist_text(std::istream& in, std::optional<std::uint64_t> num_vertices = {});
EdgeList load_edgelist_text(const std::filesystem::path& path,
                            std::optional<std::uint64_t> num_vertices = {});
void save_edgelist_text(const std::filesystem::path& path, const EdgeList& el);

void write_coo(std::ostream& out, const EdgeList& el);
EdgeList read_coo(std::istream& in);
void save_coo(const std::filesystem::path& path, const EdgeList& el);
EdgeList load_coo(const std::filesystem::path& path);

void write_csr(std::ostream& out, const CsrGraph& g);
/// Validates the graph; a violation is reported as FormatError.
CsrGraph read_csr(std::istream& in);
void save_csr(const std::filesystem::path& path, const CsrGraph& g);
CsrGraph load_csr(const std::filesystem::path& path);

enum class GraphFormat { text, coo, csr };

/// By magic bytes; anything else is treated as text.
GraphFormat detect_format(const std::filesystem::path& path);
/// Any supported format as an edge list (CSR is expanded row by row).
EdgeList load_any_edgelist(const std::filesystem::path& path);

// --- generators --------------------------------------------------------------

enum class GraphKind { kron, urnd };
GraphKind parse_graph_kind(std::string_view s);

/// 2^scale vertices and avg_degree * 2^scale edges. kron is RMAT with
/// (a, b, c) = (0.57, 0.19, 0.19) followed by a seeded vertex relabeling;
/// urnd draws both endpoints uniformly. Pure function of its arguments.
EdgeList generate_graph(GraphKind kind, unsigned scale, unsigned avg_degree, std::uint64_t seed);

// --- simulator configuration -------------------------------------------------

/// key = value lines ('#' comments). Keys:
///   l1.capacity, l1.assoc, l1.line, l1.latency (likewise l2., l3.), levels,
///   dram.latency, stream_write_cycles, ops.update, ops.pb_binning,
///   ops.binupd, ops.binread, ops.vertex, engine.tuple_cycles,
///   cobra.partition_fraction, cobra.eviction_buffers, pagerank.iters,
///   pagerank.simulated_iters, bin_range.
/// Capacities accept K/M suffixes. Unknown keys are an error.
sim::PipelineConfig parse_sim_config(std::istream& in);
sim::PipelineConfig load_sim_config(const std::filesystem::path& path);

// --- reporting ---------------------------------------------------------------

inline constexpr std::string_view csv_header =
    "workload,mode,bin_range,level,hits,misses,dram_lines,instr,cycles,wall_ns";

struct CsvRow {
  std::string workload;
  std::string mode;
  std::uint64_t bin_range = 0;
  std::string level;
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  std::uint64_t dram_lines = 0;
  std::uint64_t instr = 0;
  std::uint64_t cycles = 0;
  std::uint64_t wall_ns = 0;
};

/// One row per cache level; the run-wide columns repeat on every row.
std::vector<CsvRow> rows_for(std::string_view workload, std::string_view mode,
                             std::uint64_t bin_range, const sim::SimStats& stats,
                             std::span<const sim::CacheLevelConfig> levels, std::uint64_t wall_ns);
void write_csv(std::ostream& out, std::span<const CsvRow> rows);

struct ReportEntry {
  std::string workload;
  std::string mode;
  std::string config;
  std::uint64_t wall_ns = 0;
  std::optional<sim::SimStats> stats;
  /// Baseline cost over this entry's cost, set by BenchmarkReport::finalize.
  std::optional<double> speedup;
};

class BenchmarkReport {
 public:
  void add(ReportEntry e) { entries_.push_back(std::move(e)); }
  /// Fills speedups for workloads that have a baseline entry; simulated runs
  /// compare cycles, native runs wall time.
  void finalize();
  const std::vector<ReportEntry>& entries() const { return entries_; }
  void print(std::ostream& out) const;

 private:
  std::vector<ReportEntry> entries_;
};

}  // namespace pbkit::io
