#include <numeric>
#include <random>
#include <stdexcept>

#include "pbkit/io.hpp"

namespace pbkit::io {

namespace {

// Only the raw 64-bit engine output is used, never std distributions, so the
// graphs are identical across standard libraries.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::uint64_t below(std::mt19937_64& rng, std::uint64_t n) {
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(rng()) * n) >> 64);
}

vertex_t uniform_id(std::mt19937_64& rng, unsigned scale) {
  return scale == 0 ? 0 : static_cast<vertex_t>(rng() >> (64 - scale));
}

}  // namespace

EdgeList generate_graph(GraphKind kind, unsigned scale, unsigned avg_degree, std::uint64_t seed) {
  if (scale > 30) throw std::invalid_argument("scale must be <= 30");
  const std::uint64_t n = 1ull << scale;
  const std::uint64_t m = n * avg_degree;
  EdgeList el;
  el.num_vertices = static_cast<vertex_t>(n);
  el.edges.reserve(m);
  std::mt19937_64 rng(seed);

  if (kind == GraphKind::urnd) {
    for (std::uint64_t i = 0; i < m; ++i) {
      const vertex_t s = uniform_id(rng, scale);
      const vertex_t d = uniform_id(rng, scale);
      el.edges.push_back({s, d});
    }
    return el;
  }

  constexpr double a = 0.57, b = 0.19, c = 0.19;
  for (std::uint64_t i = 0; i < m; ++i) {
    vertex_t s = 0, d = 0;
    for (unsigned bit = 0; bit < scale; ++bit) {
      const double r = unit(rng);
      const vertex_t sb = r >= a + b ? 1 : 0;
      const vertex_t db = (r >= a && r < a + b) || r >= a + b + c ? 1 : 0;
      s = (s << 1) | sb;
      d = (d << 1) | db;
    }
    el.edges.push_back({s, d});
  }

  // Relabel so high-degree vertices are not clustered at low ids.
  std::vector<vertex_t> label(n);
  std::iota(label.begin(), label.end(), vertex_t{0});
  std::mt19937_64 perm_rng(seed ^ 0x9E3779B97F4A7C15ull);
  for (std::uint64_t i = n; i > 1; --i) std::swap(label[i - 1], label[below(perm_rng, i)]);
  for (Edge& e : el.edges) e = {label[e.src], label[e.dst]};
  return el;
}

}  // namespace pbkit::io
