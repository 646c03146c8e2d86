#include "pbkit/pipeline.hpp"

#include <algorithm>
#include <bit>
#include <memory>
#include <stdexcept>

#include "pbkit/trace_gen.hpp"

namespace pbkit::sim {

std::string_view to_string(Workload w) {
  switch (w) {
    case Workload::neighpop: return "neighpop";
    case Workload::pagerank: return "pagerank";
    case Workload::edgelist_pagerank: return "edgelist-pagerank";
    case Workload::end_to_end: return "end-to-end";
  }
  return "?";
}

std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::baseline: return "baseline";
    case Mode::pb: return "pb";
    case Mode::pb_ideal: return "pb_ideal";
    case Mode::cobra: return "cobra";
  }
  return "?";
}

Workload parse_workload(std::string_view s) {
  for (Workload w : {Workload::neighpop, Workload::pagerank, Workload::edgelist_pagerank,
                     Workload::end_to_end}) {
    if (s == to_string(w)) return w;
  }
  throw std::invalid_argument("unknown workload '" + std::string(s) + "'");
}

Mode parse_mode(std::string_view s) {
  for (Mode m : {Mode::baseline, Mode::pb, Mode::pb_ideal, Mode::cobra}) {
    if (s == to_string(m)) return m;
  }
  if (s == "pb-ideal") return Mode::pb_ideal;
  throw std::invalid_argument("unknown mode '" + std::string(s) + "'");
}

SimStats PipelineResult::total() const {
  SimStats s;
  for (const auto& p : phases) s += p.stats;
  return s;
}

SimStats PipelineResult::phase_total(std::string_view fragment) const {
  SimStats s;
  for (const auto& p : phases) {
    if (p.name.find(fragment) != std::string::npos) s += p.stats;
  }
  return s;
}

std::vector<std::uint32_t> power_of_two_range(unsigned lo, unsigned hi) {
  if (lo > hi || hi > 31) throw std::invalid_argument("bad power-of-two range");
  std::vector<std::uint32_t> out;
  for (unsigned k = lo; k <= hi; ++k) out.push_back(1u << k);
  return out;
}

std::size_t best_sweep_point(std::span<const SweepPoint> sweep) {
  if (sweep.empty()) throw std::invalid_argument("empty sweep");
  std::size_t best = 0;
  for (std::size_t i = 1; i < sweep.size(); ++i) {
    if (sweep[i].total().cycles < sweep[best].total().cycles) best = i;
  }
  return best;
}

namespace {

constexpr std::uint64_t kEdgeBytes = 8;
constexpr std::uint64_t kOffsetBytes = 8;
constexpr std::uint64_t kVertexBytes = 4;
constexpr std::uint64_t kDegreeBytes = 4;
constexpr std::uint64_t kValueBytes = 8;
constexpr std::uint64_t kBinMetaBytes = 16;

std::vector<offset_t> offsets_by(const EdgeList& el, bool by_dst) {
  std::vector<offset_t> deg(el.num_vertices, 0);
  for (const Edge& e : el.edges) ++deg[by_dst ? e.dst : e.src];
  return prefix_sum(deg);
}

std::vector<vertex_t> keys_of(const EdgeList& el) {
  std::vector<vertex_t> keys(el.edges.size());
  for (std::size_t i = 0; i < keys.size(); ++i) keys[i] = el.edges[i].src;
  return keys;
}

/// Accumulates per-iteration phase stats and extrapolates unsimulated
/// iterations from the last simulated one.
struct IterationPhases {
  std::vector<std::string> names;
  std::vector<SimStats> sum;
  std::vector<SimStats> last;

  void add(std::size_t i, const SimStats& s) {
    sum[i] += s;
    last[i] = s;
  }
};

/// One simulated execution: a simulator with cold caches plus the address
/// map of every data structure touched.
class Run {
 public:
  Run(const EdgeList& el, const PipelineConfig& cfg, bool partitioned)
      : el_(el),
        cfg_(cfg),
        levels_(partitioned ? with_partitions(cfg.levels, cfg.partition_fraction) : cfg.levels),
        sim_(levels_, cfg.cost) {
    if (partitioned) sim_.release_partitions();
    edges_ = space_.allocate(el.edges.size() * kEdgeBytes);
  }

  PipelineResult& result() { return result_; }
  Simulator& sim() { return sim_; }

  template <typename Fn>
  SimStats measure(Fn&& fn) {
    const SimStats before = sim_.stats();
    fn();
    return sim_.stats() - before;
  }

  template <typename Fn>
  void phase(std::string name, std::uint32_t bin_range, Fn&& fn) {
    result_.phases.push_back({std::move(name), bin_range, measure(fn)});
  }

  // --- build kernels -------------------------------------------------------

  void degree_count(bool out, bool in) {
    const vertex_t n = el_.num_vertices;
    if (out) out_degrees_ = space_.allocate(n * kDegreeBytes);
    if (in) in_degrees_ = space_.allocate(n * kDegreeBytes);
    phase("degree_count", 0, [&] {
      emit_degree_count(sim_, el_, edges_, out ? &out_degrees_ : nullptr,
                        in ? &in_degrees_ : nullptr, cfg_.cost);
    });
  }

  void prefix(Region degrees, Region& offsets) {
    offsets = space_.allocate((el_.num_vertices + 1ull) * kOffsetBytes);
    phase("prefix_sum", 0,
          [&] { emit_prefix_sum(sim_, el_.num_vertices, degrees, offsets, cfg_.cost); });
  }

  Region alloc_offsets() { return space_.allocate((el_.num_vertices + 1ull) * kOffsetBytes); }
  Region alloc_neighbors() { return space_.allocate(el_.edges.size() * kVertexBytes); }

  void neighpop_baseline(const NeighPopRegions& r, bool by_dst) {
    const auto offsets = offsets_by(el_, by_dst);
    phase("neighpop", 0,
          [&] { emit_neighpop_baseline(sim_, el_, r, offsets, by_dst, cfg_.cost); });
  }

  void neighpop_pb(const NeighPopRegions& r, std::uint32_t bin_range) {
    const PbConfig pb = make_pb(bin_range);
    const auto offsets = offsets_by(el_, false);
    const auto keys = keys_of(el_);
    const auto counts = count_bins(keys, pb.bin_shift(), pb.num_bins());
    const Region buffers = space_.allocate(pb.num_bins() * pb.line_size);
    const Region bins = allocate_bins(counts, pb.line_size);
    const Region meta = space_.allocate(pb.num_bins() * kBinMetaBytes);

    PartitionedUpdates parts;
    phase("neighpop.binning", bin_range, [&] {
      SoftwareBinner binner(sim_, pb, buffers, BinLayout::from_counts(counts, bins.base, pb.line_size),
                            cfg_.cost);
      emit_neighpop_binning(sim_, el_, edges_, binner);
      parts = binner.finish();
    });
    phase("neighpop.binread", bin_range, [&] {
      emit_neighpop_binread(sim_, parts, meta, bins, pb.line_size, r, offsets, cfg_.cost);
    });
  }

  void neighpop_cobra(const NeighPopRegions& r) {
    const cobra::CobraConfig cc = cobra_config();
    const auto offsets = offsets_by(el_, false);
    const auto keys = keys_of(el_);
    const unsigned shift = static_cast<unsigned>(std::countr_zero(cc.memory_bin_range()));
    const auto counts = count_bins(keys, shift, cc.num_memory_bins());
    const Region bins = allocate_bins(counts, cc.line_size);
    const Region meta = space_.allocate(cc.num_memory_bins() * kBinMetaBytes);

    PartitionedUpdates parts;
    phase("neighpop.binning", cc.memory_bin_range(), [&] {
      sim_.reserve_partitions();
      cobra::CobraBinner binner(sim_, cc, BinLayout::from_counts(counts, bins.base, cc.line_size));
      emit_neighpop_binning(sim_, el_, edges_, binner);
      parts = binner.finish();
      sim_.release_partitions();
    });
    phase("neighpop.binread", cc.memory_bin_range(), [&] {
      emit_neighpop_binread(sim_, parts, meta, bins, cc.line_size, r, offsets, cfg_.cost);
    });
  }

  // --- PageRank ------------------------------------------------------------

  void allocate_pagerank() {
    const vertex_t n = el_.num_vertices;
    pr_.ranks = space_.allocate(n * kValueBytes);
    pr_.contrib = space_.allocate(n * kValueBytes);
    pr_.next = space_.allocate(n * kValueBytes);
    if (out_degrees_.bytes == 0 && n > 0) out_degrees_ = space_.allocate(n * kDegreeBytes);
    pr_.out_degrees = out_degrees_;
  }

  void pagerank_edgelist() {
    allocate_pagerank();
    iterate({"pagerank"}, [&](IterationPhases& ph) {
      ph.add(0, measure([&] { emit_pagerank_edgelist_iteration(sim_, el_, edges_, pr_, cfg_.cost); }));
    });
  }

  void pagerank_pull(const CsrGraph& csc, Region offsets, Region neighbors) {
    allocate_pagerank();
    iterate({"pagerank"}, [&](IterationPhases& ph) {
      ph.add(0, measure([&] {
        emit_pagerank_pull_iteration(sim_, csc, offsets, neighbors, pr_, cfg_.cost);
      }));
    });
  }

  void pagerank_pb(const CsrGraph& csr, Region offsets, Region neighbors, std::uint32_t bin_range) {
    allocate_pagerank();
    const PbConfig pb = make_pb(bin_range);
    const auto counts = count_bins(csr.neighbors, pb.bin_shift(), pb.num_bins());
    const Region buffers = space_.allocate(pb.num_bins() * pb.line_size);
    const Region bins = allocate_bins(counts, pb.line_size);
    const Region meta = space_.allocate(pb.num_bins() * kBinMetaBytes);
    iterate({"pagerank.binning", "pagerank.binread"}, [&](IterationPhases& ph) {
      PartitionedUpdates parts;
      ph.add(0, measure([&] {
        SoftwareBinner binner(sim_, pb, buffers,
                              BinLayout::from_counts(counts, bins.base, pb.line_size), cfg_.cost);
        emit_pagerank_binning(sim_, csr, offsets, neighbors, pr_, binner, cfg_.cost);
        parts = binner.finish();
      }));
      ph.add(1, measure([&] {
        emit_pagerank_binread(sim_, parts, meta, bins, pb.line_size, el_.num_vertices, pr_,
                              cfg_.cost);
      }));
    }, bin_range);
  }

  void pagerank_cobra(const CsrGraph& csr, Region offsets, Region neighbors) {
    allocate_pagerank();
    const cobra::CobraConfig cc = cobra_config();
    const unsigned shift = static_cast<unsigned>(std::countr_zero(cc.memory_bin_range()));
    const auto counts = count_bins(csr.neighbors, shift, cc.num_memory_bins());
    const Region bins = allocate_bins(counts, cc.line_size);
    const Region meta = space_.allocate(cc.num_memory_bins() * kBinMetaBytes);
    iterate({"pagerank.binning", "pagerank.binread"}, [&](IterationPhases& ph) {
      PartitionedUpdates parts;
      ph.add(0, measure([&] {
        sim_.reserve_partitions();
        cobra::CobraBinner binner(sim_, cc, BinLayout::from_counts(counts, bins.base, cc.line_size));
        emit_pagerank_binning(sim_, csr, offsets, neighbors, pr_, binner, cfg_.cost);
        parts = binner.finish();
        sim_.release_partitions();
      }));
      ph.add(1, measure([&] {
        emit_pagerank_binread(sim_, parts, meta, bins, cc.line_size, el_.num_vertices, pr_,
                              cfg_.cost);
      }));
    }, cc.memory_bin_range());
  }

  cobra::CobraConfig cobra_config() {
    if (!result_.cobra) {
      auto cc = cobra::derive_level_bin_ranges(std::max<std::uint64_t>(el_.num_vertices, 1),
                                               levels_, cfg_.eviction_buffer_depth);
      result_.cobra = std::move(cc);
    }
    return *result_.cobra;
  }

  Region& out_degrees() { return out_degrees_; }
  Region& in_degrees() { return in_degrees_; }

 private:
  PbConfig make_pb(std::uint32_t bin_range) const {
    const std::uint64_t range = std::max<std::uint64_t>(el_.num_vertices, 1);
    std::uint64_t r = bin_range == 0 ? range : bin_range;
    r = std::min<std::uint64_t>(std::bit_ceil(r), std::bit_ceil(range));
    PbConfig pb;
    pb.index_range = range;
    pb.bin_range = static_cast<std::uint32_t>(r);
    pb.num_threads = 1;
    pb.line_size = levels_.front().line_size;
    pb.check();
    return pb;
  }

  Region allocate_bins(std::span<const std::uint64_t> counts, std::uint32_t line) {
    return space_.allocate(BinLayout::from_counts(counts, 0, line).end());
  }

  template <typename Body>
  void iterate(std::vector<std::string> names, Body&& body, std::uint32_t bin_range = 0) {
    const int total = cfg_.pagerank_iters;
    if (total < 1) throw std::invalid_argument("pagerank_iters must be >= 1");
    const int simulated =
        cfg_.simulated_iters <= 0 ? total : std::min(total, cfg_.simulated_iters);
    IterationPhases ph{names, std::vector<SimStats>(names.size()),
                       std::vector<SimStats>(names.size())};
    for (int it = 0; it < simulated; ++it) body(ph);
    const auto extra = static_cast<std::uint64_t>(total - simulated);
    for (std::size_t i = 0; i < names.size(); ++i) {
      SimStats s = ph.sum[i];
      if (extra > 0) s += ph.last[i].scaled(extra);
      result_.phases.push_back({names[i], bin_range, s});
    }
  }

  const EdgeList& el_;
  const PipelineConfig& cfg_;
  std::vector<CacheLevelConfig> levels_;
  Simulator sim_;
  AddressSpace space_;
  Region edges_;
  Region out_degrees_;
  Region in_degrees_;
  PageRankRegions pr_;
  PipelineResult result_;
};

void check_config(const PipelineConfig& cfg) {
  if (cfg.levels.empty()) throw std::invalid_argument("at least one cache level is required");
  for (const auto& l : cfg.levels) l.check();
  if (cfg.pagerank_iters < 1) throw std::invalid_argument("pagerank_iters must be >= 1");
}

std::vector<std::uint32_t> default_sweep(const EdgeList& el) {
  const unsigned hi = std::bit_width(std::bit_ceil(std::max<std::uint64_t>(el.num_vertices, 2))) - 1;
  return power_of_two_range(std::min(4u, hi), hi);
}

PipelineResult run_pb_ideal(const EdgeList& el, Workload workload, const PipelineConfig& cfg) {
  const auto ranges = cfg.sweep_bin_ranges.empty() ? default_sweep(el) : cfg.sweep_bin_ranges;
  const auto sweep = sweep_bin_ranges(el, workload, ranges, cfg);
  std::size_t bb = 0;
  std::size_t br = 0;
  for (std::size_t i = 1; i < sweep.size(); ++i) {
    if (sweep[i].binning.cycles < sweep[bb].binning.cycles) bb = i;
    if (sweep[i].binread.cycles < sweep[br].binread.cycles) br = i;
  }
  const std::string prefix = workload == Workload::neighpop ? "neighpop" : "pagerank";
  PipelineResult r;
  r.workload = workload;
  r.mode = Mode::pb_ideal;
  r.phases.push_back({prefix + ".binning", sweep[bb].bin_range, sweep[bb].binning});
  r.phases.push_back({prefix + ".binread", sweep[br].bin_range, sweep[br].binread});
  return r;
}

PipelineResult run_neighpop(const EdgeList& el, Mode mode, const PipelineConfig& cfg) {
  if (mode == Mode::pb_ideal) return run_pb_ideal(el, Workload::neighpop, cfg);
  Run run(el, cfg, mode == Mode::cobra);
  const NeighPopRegions r{Region{}, run.alloc_offsets(), run.alloc_neighbors()};
  switch (mode) {
    case Mode::baseline: run.neighpop_baseline(r, false); break;
    case Mode::pb: run.neighpop_pb(r, cfg.bin_range); break;
    case Mode::cobra: run.neighpop_cobra(r); break;
    default: break;
  }
  return std::move(run.result());
}

PipelineResult run_pagerank(const EdgeList& el, Mode mode, const PipelineConfig& cfg) {
  if (mode == Mode::pb_ideal) return run_pb_ideal(el, Workload::pagerank, cfg);
  Run run(el, cfg, mode == Mode::cobra);
  const bool pull = mode == Mode::baseline;
  const CsrGraph g = pull ? csc_from_edgelist(el) : csr_from_edgelist_baseline(el);
  const Region offsets = run.alloc_offsets();
  const Region neighbors = run.alloc_neighbors();
  switch (mode) {
    case Mode::baseline: run.pagerank_pull(g, offsets, neighbors); break;
    case Mode::pb: run.pagerank_pb(g, offsets, neighbors, cfg.bin_range); break;
    case Mode::cobra: run.pagerank_cobra(g, offsets, neighbors); break;
    default: break;
  }
  return std::move(run.result());
}

PipelineResult run_end_to_end(const EdgeList& el, Mode mode, const PipelineConfig& cfg) {
  if (mode == Mode::pb_ideal) {
    // Build passes from a real run, each PB kernel at its sweep-optimal phases.
    Run run(el, cfg, false);
    run.degree_count(true, false);
    Region offsets;
    run.prefix(run.out_degrees(), offsets);
    PipelineResult r = std::move(run.result());
    for (Workload w : {Workload::neighpop, Workload::pagerank}) {
      auto part = run_pb_ideal(el, w, cfg);
      r.phases.insert(r.phases.end(), part.phases.begin(), part.phases.end());
    }
    r.workload = Workload::end_to_end;
    r.mode = Mode::pb_ideal;
    return r;
  }

  Run run(el, cfg, mode == Mode::cobra);
  const bool baseline = mode == Mode::baseline;
  run.degree_count(true, baseline);
  Region offsets;
  run.prefix(baseline ? run.in_degrees() : run.out_degrees(), offsets);
  const NeighPopRegions r{Region{}, offsets, run.alloc_neighbors()};
  if (baseline) {
    run.neighpop_baseline(r, true);
    run.pagerank_pull(csc_from_edgelist(el), r.offsets, r.neighbors);
  } else if (mode == Mode::pb) {
    run.neighpop_pb(r, cfg.bin_range);
    const std::uint32_t pr_range = cfg.pagerank_bin_range ? cfg.pagerank_bin_range : cfg.bin_range;
    run.pagerank_pb(csr_from_edgelist_baseline(el), r.offsets, r.neighbors, pr_range);
  } else {
    run.neighpop_cobra(r);
    run.pagerank_cobra(csr_from_edgelist_baseline(el), r.offsets, r.neighbors);
  }
  return std::move(run.result());
}

PipelineResult run_edgelist_pagerank(const EdgeList& el, Mode mode, const PipelineConfig& cfg) {
  if (mode != Mode::baseline) {
    throw std::invalid_argument("edgelist-pagerank only runs in baseline mode");
  }
  Run run(el, cfg, false);
  run.degree_count(true, false);
  run.pagerank_edgelist();
  return std::move(run.result());
}

}  // namespace

PipelineResult simulate_pipeline(const EdgeList& el, Workload workload, Mode mode,
                                 const PipelineConfig& cfg) {
  el.check();
  check_config(cfg);
  PipelineResult r;
  switch (workload) {
    case Workload::neighpop: r = run_neighpop(el, mode, cfg); break;
    case Workload::pagerank: r = run_pagerank(el, mode, cfg); break;
    case Workload::edgelist_pagerank: r = run_edgelist_pagerank(el, mode, cfg); break;
    case Workload::end_to_end: r = run_end_to_end(el, mode, cfg); break;
  }
  r.workload = workload;
  r.mode = mode;
  return r;
}

std::vector<SweepPoint> sweep_bin_ranges(const EdgeList& el, Workload workload,
                                         std::span<const std::uint32_t> bin_ranges,
                                         const PipelineConfig& cfg) {
  el.check();
  check_config(cfg);
  if (workload != Workload::neighpop && workload != Workload::pagerank) {
    throw std::invalid_argument("sweeps run on the neighpop or pagerank workload");
  }
  if (bin_ranges.empty()) throw std::invalid_argument("no bin ranges to sweep");
  std::vector<SweepPoint> out;
  for (std::uint32_t r : bin_ranges) {
    if (r == 0) throw std::invalid_argument("bin range must be >= 1");
    PipelineConfig c = cfg;
    c.bin_range = r;
    const PipelineResult res = simulate_pipeline(el, workload, Mode::pb, c);
    out.push_back({r, res.phase_total("binning"), res.phase_total("binread")});
  }
  return out;
}

}  // namespace pbkit::sim
