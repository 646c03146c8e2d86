#pragma once

#include <bit>
#include <cstdint>
#include <vector>

#include "pbkit/graph.hpp"
#include "pbkit/pb_engine.hpp"

namespace pbkit {

struct PageRankParams {
  double damping = 0.85;
  int max_iters = 20;
  /// Stop once the L1 change of one iteration drops below this. Zero forces
  /// exactly max_iters iterations.
  double tolerance = 1e-4;

  void check() const;
};

struct PageRankResult {
  std::vector<double> ranks;
  int iterations = 0;
  /// Sum of ranks after each iteration.
  std::vector<double> rank_sums;
};

/// Edgelist-to-CSR through propagation blocking: (src, dst) tuples are binned
/// by src, then each bin fills its vertices' neighbor slots with plain
/// (non-atomic) cursor increments.
CsrGraph neighpop_pb(const EdgeList& el, const PbConfig& cfg, const CostModel& cost = {});

/// Pull-style PageRank over incoming neighbors. Dangling mass is spread
/// uniformly every iteration.
PageRankResult pagerank_baseline(const CsrGraph& csr, const CsrGraph& csc,
                                 const PageRankParams& params = {});

/// Push-style PageRank with contributions binned by destination. Each tuple
/// carries its contribution as a 32-bit float; the mass lost to that
/// rounding is spread uniformly together with the dangling mass so the rank
/// sum is conserved.
PageRankResult pagerank_pb(const CsrGraph& csr, const PageRankParams& params,
                           const PbConfig& cfg, const CostModel& cost = {});

inline std::uint32_t encode_contribution(float c) { return std::bit_cast<std::uint32_t>(c); }
inline float decode_contribution(std::uint32_t bits) { return std::bit_cast<float>(bits); }

}  // namespace pbkit
