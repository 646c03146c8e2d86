#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pbkit {

using vertex_t = std::uint32_t;
using offset_t = std::uint64_t;

/// Largest accepted vertex count; ids must fit in 32 bits.
inline constexpr std::uint64_t max_vertices = 0xFFFFFFFFull;

struct Edge {
  vertex_t src;
  vertex_t dst;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Coordinate-list (COO) graph. Duplicates and self-loops are kept verbatim.
struct EdgeList {
  vertex_t num_vertices = 0;
  std::vector<Edge> edges;

  std::size_t num_edges() const { return edges.size(); }

  /// Throws std::out_of_range naming the first edge with an endpoint >= num_vertices.
  void check() const;

  friend bool operator==(const EdgeList&, const EdgeList&) = default;
};

/// Compressed sparse row graph. offsets has num_vertices + 1 entries.
/// The same type holds CSC graphs (neighbors are then in-neighbors).
struct CsrGraph {
  vertex_t num_vertices = 0;
  std::vector<offset_t> offsets{0};
  std::vector<vertex_t> neighbors;

  std::size_t num_edges() const { return neighbors.size(); }
  offset_t degree(vertex_t v) const { return offsets[v + 1] - offsets[v]; }
  std::span<const vertex_t> neighbors_of(vertex_t v) const {
    return {neighbors.data() + offsets[v], static_cast<std::size_t>(degree(v))};
  }

  friend bool operator==(const CsrGraph&, const CsrGraph&) = default;
};

/// Vertex relabeling: new_id_of[old] = new.
struct Permutation {
  std::vector<vertex_t> new_id_of;

  std::size_t size() const { return new_id_of.size(); }
  bool is_bijective() const;
  static Permutation identity(vertex_t n);
};

struct CsrViolation {
  std::string message;
  std::size_t index = 0;
};

enum class FillMode { sequential, parallel };

std::vector<offset_t> degrees_from_edgelist(const EdgeList& el);

/// Exclusive scan with a trailing total. Throws std::overflow_error if the
/// running total does not fit in offset_t.
std::vector<offset_t> prefix_sum(std::span<const offset_t> degrees);

/// Edgelist-to-CSR neighbor population with per-vertex fill cursors. The
/// returned offsets are untouched by the fill pass. In parallel mode the
/// cursors are advanced with atomic fetch-add and the per-vertex neighbor
/// order is unspecified.
CsrGraph csr_from_edgelist_baseline(const EdgeList& el,
                                    FillMode mode = FillMode::sequential,
                                    unsigned num_threads = 1);

/// CSR of the transposed graph (incoming neighbors).
CsrGraph csc_from_edgelist(const EdgeList& el, FillMode mode = FillMode::sequential,
                           unsigned num_threads = 1);

EdgeList transpose(const EdgeList& el);
EdgeList edgelist_from_csr(const CsrGraph& g);

/// Descending degree, ascending old id on ties.
Permutation degree_sort_permutation(const CsrGraph& g);

EdgeList apply_permutation(const EdgeList& el, const Permutation& p);

std::optional<CsrViolation> validate_csr(const CsrGraph& g);

}  // namespace pbkit
