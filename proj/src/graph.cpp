#include "pbkit/graph.hpp"

#include <algorithm>
#include <atomic>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "pbkit/parallel.hpp"

namespace pbkit {

void EdgeList::check() const {
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (edges[i].src >= num_vertices || edges[i].dst >= num_vertices) {
      throw std::out_of_range("edge " + std::to_string(i) + " has an endpoint >= " +
                              std::to_string(num_vertices));
    }
  }
}

bool Permutation::is_bijective() const {
  std::vector<bool> seen(new_id_of.size(), false);
  for (vertex_t id : new_id_of) {
    if (id >= new_id_of.size() || seen[id]) return false;
    seen[id] = true;
  }
  return true;
}

Permutation Permutation::identity(vertex_t n) {
  Permutation p;
  p.new_id_of.resize(n);
  std::iota(p.new_id_of.begin(), p.new_id_of.end(), vertex_t{0});
  return p;
}

std::vector<offset_t> degrees_from_edgelist(const EdgeList& el) {
  std::vector<offset_t> degrees(el.num_vertices, 0);
  for (const Edge& e : el.edges) ++degrees[e.src];
  return degrees;
}

std::vector<offset_t> prefix_sum(std::span<const offset_t> degrees) {
  std::vector<offset_t> offsets(degrees.size() + 1);
  offset_t total = 0;
  offsets[0] = 0;
  for (std::size_t i = 0; i < degrees.size(); ++i) {
    if (degrees[i] > std::numeric_limits<offset_t>::max() - total) {
      throw std::overflow_error("graph too large: offset overflow at vertex " +
                                std::to_string(i));
    }
    total += degrees[i];
    offsets[i + 1] = total;
  }
  return offsets;
}

namespace {

CsrGraph populate(vertex_t num_vertices, std::span<const Edge> edges, bool by_dst,
                  FillMode mode, unsigned num_threads) {
  auto key = [by_dst](const Edge& e) { return by_dst ? e.dst : e.src; };
  auto value = [by_dst](const Edge& e) { return by_dst ? e.src : e.dst; };

  std::vector<offset_t> degrees(num_vertices, 0);
  for (const Edge& e : edges) ++degrees[key(e)];

  CsrGraph g;
  g.num_vertices = num_vertices;
  g.offsets = prefix_sum(degrees);
  g.neighbors.resize(edges.size());

  // Fill cursors live in a working copy so g.offsets stays pristine.
  std::vector<offset_t> cursors(g.offsets.begin(), g.offsets.end() - 1);
  if (mode == FillMode::sequential) {
    for (const Edge& e : edges) g.neighbors[cursors[key(e)]++] = value(e);
    return g;
  }
  parallel_blocks(edges.size(), num_threads, [&](unsigned, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      std::atomic_ref<offset_t> cursor(cursors[key(edges[i])]);
      g.neighbors[cursor.fetch_add(1, std::memory_order_relaxed)] = value(edges[i]);
    }
  });
  return g;
}

}  // namespace

CsrGraph csr_from_edgelist_baseline(const EdgeList& el, FillMode mode, unsigned num_threads) {
  return populate(el.num_vertices, el.edges, false, mode, num_threads);
}

CsrGraph csc_from_edgelist(const EdgeList& el, FillMode mode, unsigned num_threads) {
  return populate(el.num_vertices, el.edges, true, mode, num_threads);
}

EdgeList transpose(const EdgeList& el) {
  EdgeList t;
  t.num_vertices = el.num_vertices;
  t.edges.reserve(el.edges.size());
  for (const Edge& e : el.edges) t.edges.push_back({e.dst, e.src});
  return t;
}

EdgeList edgelist_from_csr(const CsrGraph& g) {
  EdgeList el;
  el.num_vertices = g.num_vertices;
  el.edges.reserve(g.num_edges());
  for (vertex_t v = 0; v < g.num_vertices; ++v) {
    for (vertex_t u : g.neighbors_of(v)) el.edges.push_back({v, u});
  }
  return el;
}

Permutation degree_sort_permutation(const CsrGraph& g) {
  std::vector<vertex_t> order(g.num_vertices);
  std::iota(order.begin(), order.end(), vertex_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](vertex_t a, vertex_t b) { return g.degree(a) > g.degree(b); });
  Permutation p;
  p.new_id_of.resize(g.num_vertices);
  for (vertex_t rank = 0; rank < g.num_vertices; ++rank) p.new_id_of[order[rank]] = rank;
  return p;
}

EdgeList apply_permutation(const EdgeList& el, const Permutation& p) {
  if (p.size() != el.num_vertices) {
    throw std::invalid_argument("permutation length " + std::to_string(p.size()) +
                                " does not match vertex count " +
                                std::to_string(el.num_vertices));
  }
  EdgeList out;
  out.num_vertices = el.num_vertices;
  out.edges.reserve(el.edges.size());
  for (const Edge& e : el.edges) out.edges.push_back({p.new_id_of[e.src], p.new_id_of[e.dst]});
  return out;
}

std::optional<CsrViolation> validate_csr(const CsrGraph& g) {
  if (g.offsets.size() != static_cast<std::size_t>(g.num_vertices) + 1) {
    return CsrViolation{"offsets length " + std::to_string(g.offsets.size()) +
                            " != num_vertices + 1",
                        g.offsets.size()};
  }
  if (g.offsets[0] != 0) return CsrViolation{"offsets[0] != 0", 0};
  for (std::size_t i = 1; i < g.offsets.size(); ++i) {
    if (g.offsets[i] < g.offsets[i - 1]) {
      return CsrViolation{"non-monotone at " + std::to_string(i), i};
    }
  }
  if (g.offsets.back() != g.neighbors.size()) {
    return CsrViolation{"last offset " + std::to_string(g.offsets.back()) +
                            " != num_edges " + std::to_string(g.neighbors.size()),
                        g.offsets.size() - 1};
  }
  for (std::size_t i = 0; i < g.neighbors.size(); ++i) {
    if (g.neighbors[i] >= g.num_vertices) {
      return CsrViolation{"neighbor out of range at " + std::to_string(i), i};
    }
  }
  return std::nullopt;
}

}  // namespace pbkit
