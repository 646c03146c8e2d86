#include "pbkit/kernels.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace pbkit {

void PageRankParams::check() const {
  if (!(damping > 0.0 && damping < 1.0)) throw std::invalid_argument("damping must be in (0,1)");
  if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
  if (!(tolerance >= 0.0)) throw std::invalid_argument("tolerance must be >= 0");
}

CsrGraph neighpop_pb(const EdgeList& el, const PbConfig& cfg, const CostModel& cost) {
  if (cfg.index_range != el.num_vertices) {
    throw std::invalid_argument("index range " + std::to_string(cfg.index_range) +
                                " != vertex count " + std::to_string(el.num_vertices));
  }
  CsrGraph g;
  g.num_vertices = el.num_vertices;
  g.offsets = prefix_sum(degrees_from_edgelist(el));
  g.neighbors.resize(el.num_edges());

  BinningResult binned = binning_phase_with(
      el.num_edges(), cfg,
      [&](ThreadBinner& binner, std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) binner.push({el.edges[i].src, el.edges[i].dst});
      },
      cost);

  std::vector<offset_t> cursors(g.offsets.begin(), g.offsets.end() - 1);
  bin_read_phase(
      binned.bins,
      [&](const UpdateTuple& t) {
        const offset_t slot = cursors[t.index];
        g.neighbors[slot] = t.value;
        cursors[t.index] = slot + 1;
      },
      cfg.num_threads);
  return g;
}

namespace {

struct IterationEnd {
  double diff = 0.0;
  double sum = 0.0;
};

// rank[v] <- base + damping * (incoming[v] + spread / V)
IterationEnd finish_iteration(std::vector<double>& ranks, const std::vector<double>& incoming,
                              double spread, double damping) {
  const double n = static_cast<double>(ranks.size());
  const double base = (1.0 - damping) / n + damping * spread / n;
  IterationEnd end;
  for (std::size_t v = 0; v < ranks.size(); ++v) {
    const double next = base + damping * incoming[v];
    end.diff += std::fabs(next - ranks[v]);
    ranks[v] = next;
  }
  end.sum = std::accumulate(ranks.begin(), ranks.end(), 0.0);
  return end;
}

}  // namespace

PageRankResult pagerank_baseline(const CsrGraph& csr, const CsrGraph& csc,
                                 const PageRankParams& params) {
  params.check();
  if (csr.num_vertices != csc.num_vertices || csr.num_edges() != csc.num_edges()) {
    throw std::invalid_argument("CSR and CSC do not describe the same graph");
  }
  const vertex_t n = csr.num_vertices;
  PageRankResult result;
  if (n == 0) return result;
  result.ranks.assign(n, 1.0 / n);
  std::vector<double> contrib(n), incoming(n);

  for (int iter = 0; iter < params.max_iters; ++iter) {
    double dangling = 0.0;
    for (vertex_t u = 0; u < n; ++u) {
      const offset_t deg = csr.degree(u);
      if (deg == 0) {
        dangling += result.ranks[u];
        contrib[u] = 0.0;
      } else {
        contrib[u] = result.ranks[u] / static_cast<double>(deg);
      }
    }
    for (vertex_t v = 0; v < n; ++v) {
      double sum = 0.0;
      for (vertex_t u : csc.neighbors_of(v)) sum += contrib[u];
      incoming[v] = sum;
    }
    const IterationEnd end = finish_iteration(result.ranks, incoming, dangling, params.damping);
    result.rank_sums.push_back(end.sum);
    result.iterations = iter + 1;
    if (end.diff < params.tolerance) break;
  }
  return result;
}

PageRankResult pagerank_pb(const CsrGraph& csr, const PageRankParams& params,
                           const PbConfig& cfg, const CostModel& cost) {
  params.check();
  if (cfg.index_range != csr.num_vertices) {
    throw std::invalid_argument("index range " + std::to_string(cfg.index_range) +
                                " != vertex count " + std::to_string(csr.num_vertices));
  }
  const vertex_t n = csr.num_vertices;
  PageRankResult result;
  if (n == 0) return result;
  result.ranks.assign(n, 1.0 / n);
  std::vector<double> incoming(n);
  auto quantized = [&](vertex_t u) {
    return static_cast<float>(result.ranks[u] / static_cast<double>(csr.degree(u)));
  };

  for (int iter = 0; iter < params.max_iters; ++iter) {
    BinningResult binned = binning_phase_with(
        n, cfg,
        [&](ThreadBinner& binner, std::size_t begin, std::size_t end) {
          for (std::size_t u = begin; u < end; ++u) {
            if (csr.degree(static_cast<vertex_t>(u)) == 0) continue;
            const std::uint32_t payload = encode_contribution(quantized(static_cast<vertex_t>(u)));
            for (vertex_t dst : csr.neighbors_of(static_cast<vertex_t>(u))) {
              binner.push({dst, payload});
            }
          }
        },
        cost);

    // Mass not carried by tuples: dangling ranks plus float rounding.
    double spread = 0.0;
    for (vertex_t u = 0; u < n; ++u) {
      const offset_t deg = csr.degree(u);
      if (deg == 0) {
        spread += result.ranks[u];
      } else {
        spread += result.ranks[u] - static_cast<double>(deg) * static_cast<double>(quantized(u));
      }
    }

    std::fill(incoming.begin(), incoming.end(), 0.0);
    bin_read_phase(
        binned.bins,
        [&](const UpdateTuple& t) { incoming[t.index] += decode_contribution(t.value); },
        cfg.num_threads);

    const IterationEnd end = finish_iteration(result.ranks, incoming, spread, params.damping);
    result.rank_sums.push_back(end.sum);
    result.iterations = iter + 1;
    if (end.diff < params.tolerance) break;
  }
  return result;
}

}  // namespace pbkit
