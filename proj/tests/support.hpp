#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "pbkit/graph.hpp"

namespace testsupport {

inline pbkit::EdgeList random_graph(std::mt19937_64& rng, pbkit::vertex_t n, std::size_t m) {
  pbkit::EdgeList el;
  el.num_vertices = n;
  std::uniform_int_distribution<pbkit::vertex_t> pick(0, n - 1);
  for (std::size_t i = 0; i < m; ++i) el.edges.push_back({pick(rng), pick(rng)});
  return el;
}

/// Sorted neighbor list of every vertex.
inline std::vector<std::vector<pbkit::vertex_t>> neighbor_sets(const pbkit::CsrGraph& g) {
  std::vector<std::vector<pbkit::vertex_t>> out(g.num_vertices);
  for (pbkit::vertex_t v = 0; v < g.num_vertices; ++v) {
    auto nb = g.neighbors_of(v);
    out[v].assign(nb.begin(), nb.end());
    std::sort(out[v].begin(), out[v].end());
  }
  return out;
}

/// Brute-force adjacency straight from the edge list, keyed by src.
inline std::vector<std::vector<pbkit::vertex_t>> neighbor_sets(const pbkit::EdgeList& el) {
  std::vector<std::vector<pbkit::vertex_t>> out(el.num_vertices);
  for (const auto& e : el.edges) out[e.src].push_back(e.dst);
  for (auto& v : out) std::sort(v.begin(), v.end());
  return out;
}

/// Per-test scratch directory, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("pbkit_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace testsupport
