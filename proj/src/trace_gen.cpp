#include "pbkit/trace_gen.hpp"

#include <stdexcept>

namespace pbkit::sim {

namespace {

inline void read(TraceSink& sink, std::uint64_t address, std::uint16_t size) {
  sink.event({AccessKind::read, address, size});
}
inline void write(TraceSink& sink, std::uint64_t address, std::uint16_t size) {
  sink.event({AccessKind::write, address, size});
}

constexpr std::uint32_t edge_bytes = 8;
constexpr std::uint32_t tuple_bytes = 8;
constexpr std::uint32_t offset_bytes = 8;
constexpr std::uint32_t vertex_bytes = 4;
constexpr std::uint32_t degree_bytes = 4;
constexpr std::uint32_t value_bytes = 8;
constexpr std::uint32_t bin_meta_bytes = 16;

}  // namespace

Region AddressSpace::allocate(std::uint64_t bytes, std::uint64_t align) {
  next_ = (next_ + align - 1) / align * align;
  Region r{next_, bytes};
  next_ += std::max<std::uint64_t>(bytes, 1);
  return r;
}

PartitionedUpdates PartitionedUpdates::from_bins(const std::vector<std::vector<UpdateTuple>>& bins) {
  PartitionedUpdates p;
  p.bin_start.reserve(bins.size() + 1);
  std::size_t total = 0;
  for (const auto& b : bins) total += b.size();
  p.tuples.reserve(total);
  for (const auto& b : bins) {
    p.tuples.insert(p.tuples.end(), b.begin(), b.end());
    p.bin_start.push_back(p.tuples.size());
  }
  return p;
}

PartitionedUpdates partition_updates(std::span<const UpdateTuple> updates, const PbConfig& cfg) {
  const unsigned shift = cfg.bin_shift();
  PartitionedUpdates p;
  p.bin_start.assign(cfg.num_bins() + 1, 0);
  for (const UpdateTuple& t : updates) ++p.bin_start[(t.index >> shift) + 1];
  for (std::size_t b = 1; b < p.bin_start.size(); ++b) p.bin_start[b] += p.bin_start[b - 1];
  std::vector<std::uint64_t> cursor(p.bin_start.begin(), p.bin_start.end() - 1);
  p.tuples.resize(updates.size());
  for (const UpdateTuple& t : updates) p.tuples[cursor[t.index >> shift]++] = t;
  return p;
}

BinLayout BinLayout::from_counts(std::span<const std::uint64_t> counts, std::uint64_t base,
                                 std::uint32_t line_size) {
  const std::uint64_t per_line = line_size / tuple_bytes;
  BinLayout layout;
  layout.start.reserve(counts.size() + 1);
  std::uint64_t at = base;
  for (std::uint64_t c : counts) {
    layout.start.push_back(at);
    at += (c + per_line - 1) / per_line * line_size;
  }
  layout.start.push_back(at);
  return layout;
}

std::vector<std::uint64_t> count_bins(std::span<const vertex_t> keys, unsigned shift,
                                      std::uint64_t num_bins) {
  std::vector<std::uint64_t> counts(num_bins, 0);
  for (vertex_t k : keys) ++counts[k >> shift];
  return counts;
}

namespace {

std::vector<std::uint64_t> counts_of(const PartitionedUpdates& p) {
  std::vector<std::uint64_t> counts(p.num_bins());
  for (std::uint64_t b = 0; b < counts.size(); ++b) counts[b] = p.bin_start[b + 1] - p.bin_start[b];
  return counts;
}

}  // namespace

SoftwareBinner::SoftwareBinner(TraceSink& sink, const PbConfig& cfg, Region buffers,
                               BinLayout bins, const CostModel& cost)
    : sink_(sink),
      shift_(cfg.bin_shift()),
      line_size_(cfg.line_size),
      capacity_(cfg.buffer_capacity()),
      buffers_(buffers),
      layout_(std::move(bins)),
      binning_ops_(cost.pb_binning_ops),
      occupancy_(cfg.num_bins(), 0),
      cursor_(layout_.start.begin(), layout_.start.end() - 1),
      bins_(cfg.num_bins()) {
  if (layout_.start.size() != cfg.num_bins() + 1) {
    throw std::invalid_argument("bin layout does not match the number of bins");
  }
}

void SoftwareBinner::update(UpdateTuple t) {
  const std::uint64_t bin = t.index >> shift_;
  const std::uint64_t slot = buffers_.base + bin * line_size_ + occupancy_[bin] * tuple_bytes;
  sink_.ops(binning_ops_);
  read(sink_, slot, tuple_bytes);
  write(sink_, slot, tuple_bytes);
  bins_[bin].push_back(t);
  if (++occupancy_[bin] == capacity_) flush(bin);
}

void SoftwareBinner::flush(std::uint64_t bin) {
  const auto bytes = static_cast<std::uint16_t>(occupancy_[bin] * tuple_bytes);
  sink_.event({AccessKind::stream_write, cursor_[bin], bytes});
  cursor_[bin] += line_size_;
  occupancy_[bin] = 0;
  ++flushes_;
}

PartitionedUpdates SoftwareBinner::finish() {
  for (std::uint64_t b = 0; b < occupancy_.size(); ++b) {
    if (occupancy_[b] > 0) flush(b);
  }
  return PartitionedUpdates::from_bins(bins_);
}

BinningLayout make_binning_layout(AddressSpace& space, std::span<const UpdateTuple> updates,
                                  const PbConfig& cfg) {
  std::vector<std::uint64_t> counts(cfg.num_bins(), 0);
  for (const UpdateTuple& t : updates) ++counts[t.index >> cfg.bin_shift()];
  BinningLayout layout;
  layout.input = space.allocate(updates.size() * tuple_bytes);
  layout.buffers = space.allocate(cfg.num_bins() * cfg.line_size);
  const BinLayout bins = BinLayout::from_counts(counts, 0, cfg.line_size);
  layout.bins = space.allocate(bins.end());
  return layout;
}

BinReadLayout make_binread_layout(AddressSpace& space, const PartitionedUpdates& bins,
                                  std::uint64_t num_vertices, std::uint64_t num_edges,
                                  std::uint32_t line_size) {
  BinReadLayout layout;
  layout.bin_meta = space.allocate(bins.num_bins() * bin_meta_bytes);
  layout.bins = space.allocate(BinLayout::from_counts(counts_of(bins), 0, line_size).end());
  layout.offsets = space.allocate((num_vertices + 1) * offset_bytes);
  layout.neighbors = space.allocate(num_edges * vertex_bytes);
  return layout;
}

std::vector<MemEvent> trace_of_binning(std::span<const UpdateTuple> updates, const PbConfig& cfg,
                                       const BinningLayout& layout) {
  TraceRecorder rec;
  std::vector<std::uint64_t> counts(cfg.num_bins(), 0);
  for (const UpdateTuple& t : updates) ++counts[t.index >> cfg.bin_shift()];
  SoftwareBinner binner(rec, cfg, layout.buffers,
                        BinLayout::from_counts(counts, layout.bins.base, cfg.line_size), CostModel{});
  for (std::size_t i = 0; i < updates.size(); ++i) {
    read(rec, layout.input.at(i, tuple_bytes), tuple_bytes);
    binner.update(updates[i]);
  }
  binner.finish();
  return std::move(rec.events);
}

void emit_neighpop_binread(TraceSink& sink, const PartitionedUpdates& bins, Region bin_meta,
                           Region bins_region, std::uint32_t line_size, const NeighPopRegions& r,
                           std::span<const offset_t> offsets, const CostModel& cost) {
  const BinLayout layout = BinLayout::from_counts(counts_of(bins), bins_region.base, line_size);
  std::vector<offset_t> cursor(offsets.begin(), offsets.end() - 1);
  for (std::uint64_t b = 0; b < bins.num_bins(); ++b) {
    read(sink, bin_meta.at(b, bin_meta_bytes), bin_meta_bytes);
    const auto tuples = bins.bin(b);
    for (std::size_t i = 0; i < tuples.size(); ++i) {
      const vertex_t v = tuples[i].index;
      sink.ops(cost.binread_ops);
      read(sink, layout.start[b] + i * tuple_bytes, tuple_bytes);
      read(sink, r.offsets.at(v, offset_bytes), offset_bytes);
      write(sink, r.neighbors.at(cursor[v]++, vertex_bytes), vertex_bytes);
      write(sink, r.offsets.at(v, offset_bytes), offset_bytes);
    }
  }
}

std::vector<MemEvent> trace_of_binread(const PartitionedUpdates& bins, const PbConfig& cfg,
                                       const BinReadLayout& layout,
                                       std::span<const offset_t> offsets) {
  if (bins.num_bins() != cfg.num_bins()) {
    throw std::invalid_argument("bins were not produced with this configuration");
  }
  TraceRecorder rec;
  emit_neighpop_binread(rec, bins, layout.bin_meta, layout.bins, cfg.line_size,
                        {Region{}, layout.offsets, layout.neighbors}, offsets, CostModel{});
  return std::move(rec.events);
}

void emit_neighpop_baseline(TraceSink& sink, const EdgeList& el, const NeighPopRegions& r,
                            std::span<const offset_t> offsets, bool by_dst, const CostModel& cost) {
  std::vector<offset_t> cursor(offsets.begin(), offsets.end() - 1);
  for (std::size_t i = 0; i < el.edges.size(); ++i) {
    const vertex_t v = by_dst ? el.edges[i].dst : el.edges[i].src;
    sink.ops(cost.update_ops);
    read(sink, r.edges.at(i, edge_bytes), edge_bytes);
    read(sink, r.offsets.at(v, offset_bytes), offset_bytes);
    write(sink, r.neighbors.at(cursor[v]++, vertex_bytes), vertex_bytes);
    write(sink, r.offsets.at(v, offset_bytes), offset_bytes);
  }
}

void emit_neighpop_binning(TraceSink& sink, const EdgeList& el, Region edges, TraceBinner& binner) {
  for (std::size_t i = 0; i < el.edges.size(); ++i) {
    read(sink, edges.at(i, edge_bytes), edge_bytes);
    binner.update({el.edges[i].src, el.edges[i].dst});
  }
}

void emit_degree_count(TraceSink& sink, const EdgeList& el, Region edges, Region* out_degrees,
                       Region* in_degrees, const CostModel& cost) {
  for (std::size_t i = 0; i < el.edges.size(); ++i) {
    read(sink, edges.at(i, edge_bytes), edge_bytes);
    if (out_degrees) {
      sink.ops(cost.update_ops);
      read(sink, out_degrees->at(el.edges[i].src, degree_bytes), degree_bytes);
      write(sink, out_degrees->at(el.edges[i].src, degree_bytes), degree_bytes);
    }
    if (in_degrees) {
      sink.ops(cost.update_ops);
      read(sink, in_degrees->at(el.edges[i].dst, degree_bytes), degree_bytes);
      write(sink, in_degrees->at(el.edges[i].dst, degree_bytes), degree_bytes);
    }
  }
}

void emit_prefix_sum(TraceSink& sink, vertex_t n, Region degrees, Region offsets,
                     const CostModel& cost) {
  write(sink, offsets.at(0, offset_bytes), offset_bytes);
  for (vertex_t v = 0; v < n; ++v) {
    sink.ops(cost.vertex_ops);
    read(sink, degrees.at(v, degree_bytes), degree_bytes);
    write(sink, offsets.at(v + 1ull, offset_bytes), offset_bytes);
  }
}

void emit_pagerank_edgelist_iteration(TraceSink& sink, const EdgeList& el, Region edges,
                                      const PageRankRegions& r, const CostModel& cost) {
  for (vertex_t u = 0; u < el.num_vertices; ++u) {
    sink.ops(cost.vertex_ops);
    read(sink, r.ranks.at(u, value_bytes), value_bytes);
    read(sink, r.out_degrees.at(u, degree_bytes), degree_bytes);
    write(sink, r.contrib.at(u, value_bytes), value_bytes);
    write(sink, r.next.at(u, value_bytes), value_bytes);
  }
  for (std::size_t i = 0; i < el.edges.size(); ++i) {
    const Edge e = el.edges[i];
    sink.ops(cost.update_ops);
    read(sink, edges.at(i, edge_bytes), edge_bytes);
    read(sink, r.contrib.at(e.src, value_bytes), value_bytes);
    read(sink, r.next.at(e.dst, value_bytes), value_bytes);
    write(sink, r.next.at(e.dst, value_bytes), value_bytes);
  }
  for (vertex_t v = 0; v < el.num_vertices; ++v) {
    sink.ops(cost.vertex_ops);
    read(sink, r.next.at(v, value_bytes), value_bytes);
    write(sink, r.ranks.at(v, value_bytes), value_bytes);
  }
}

void emit_pagerank_pull_iteration(TraceSink& sink, const CsrGraph& csc, Region csc_offsets,
                                  Region csc_neighbors, const PageRankRegions& r,
                                  const CostModel& cost) {
  for (vertex_t u = 0; u < csc.num_vertices; ++u) {
    sink.ops(cost.vertex_ops);
    read(sink, r.ranks.at(u, value_bytes), value_bytes);
    read(sink, r.out_degrees.at(u, degree_bytes), degree_bytes);
    write(sink, r.contrib.at(u, value_bytes), value_bytes);
  }
  for (vertex_t v = 0; v < csc.num_vertices; ++v) {
    sink.ops(cost.vertex_ops);
    read(sink, csc_offsets.at(v + 1ull, offset_bytes), offset_bytes);
    for (offset_t i = csc.offsets[v]; i < csc.offsets[v + 1]; ++i) {
      sink.ops(cost.update_ops);
      read(sink, csc_neighbors.at(i, vertex_bytes), vertex_bytes);
      read(sink, r.contrib.at(csc.neighbors[i], value_bytes), value_bytes);
    }
    write(sink, r.ranks.at(v, value_bytes), value_bytes);
  }
}

void emit_pagerank_binning(TraceSink& sink, const CsrGraph& csr, Region csr_offsets,
                           Region csr_neighbors, const PageRankRegions& r, TraceBinner& binner,
                           const CostModel& cost) {
  for (vertex_t u = 0; u < csr.num_vertices; ++u) {
    sink.ops(cost.vertex_ops);
    read(sink, csr_offsets.at(u + 1ull, offset_bytes), offset_bytes);
    read(sink, r.ranks.at(u, value_bytes), value_bytes);
    read(sink, r.out_degrees.at(u, degree_bytes), degree_bytes);
    for (offset_t i = csr.offsets[u]; i < csr.offsets[u + 1]; ++i) {
      read(sink, csr_neighbors.at(i, vertex_bytes), vertex_bytes);
      binner.update({csr.neighbors[i], u});
    }
  }
}

void emit_pagerank_binread(TraceSink& sink, const PartitionedUpdates& bins, Region bin_meta,
                           Region bins_region, std::uint32_t line_size, vertex_t n,
                           const PageRankRegions& r, const CostModel& cost) {
  const BinLayout layout = BinLayout::from_counts(counts_of(bins), bins_region.base, line_size);
  for (std::uint64_t b = 0; b < bins.num_bins(); ++b) {
    read(sink, bin_meta.at(b, bin_meta_bytes), bin_meta_bytes);
    const auto tuples = bins.bin(b);
    for (std::size_t i = 0; i < tuples.size(); ++i) {
      sink.ops(cost.binread_ops);
      read(sink, layout.start[b] + i * tuple_bytes, tuple_bytes);
      read(sink, r.next.at(tuples[i].index, value_bytes), value_bytes);
      write(sink, r.next.at(tuples[i].index, value_bytes), value_bytes);
    }
  }
  for (vertex_t v = 0; v < n; ++v) {
    sink.ops(cost.vertex_ops);
    read(sink, r.next.at(v, value_bytes), value_bytes);
    write(sink, r.ranks.at(v, value_bytes), value_bytes);
    write(sink, r.next.at(v, value_bytes), value_bytes);
  }
}

}  // namespace pbkit::sim
