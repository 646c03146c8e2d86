#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "pbkit/error.hpp"
#include "pbkit/graph.hpp"
#include "pbkit/io.hpp"
#include "pbkit/kernels.hpp"
#include "pbkit/pipeline.hpp"

namespace {

using namespace pbkit;
using Clock = std::chrono::steady_clock;

std::uint64_t elapsed_ns(Clock::time_point start) {
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - start).count());
}

std::uint32_t parse_power(const std::string& tok) {
  if (tok.rfind("2^", 0) == 0) {
    const unsigned k = static_cast<unsigned>(std::stoul(tok.substr(2)));
    if (k > 31) throw std::invalid_argument("bin range exponent too large: " + tok);
    return 1u << k;
  }
  const unsigned long v = std::stoul(tok);
  if (v == 0 || v > (1ul << 31)) throw std::invalid_argument("bad bin range: " + tok);
  return static_cast<std::uint32_t>(v);
}

/// "2^a..2^b" (every power of two in between) or a comma list.
std::vector<std::uint32_t> parse_bin_ranges(const std::string& spec) {
  const auto dots = spec.find("..");
  if (dots != std::string::npos) {
    const std::uint32_t lo = parse_power(spec.substr(0, dots));
    const std::uint32_t hi = parse_power(spec.substr(dots + 2));
    if (lo > hi) throw std::invalid_argument("empty bin range list: " + spec);
    std::vector<std::uint32_t> out;
    for (std::uint64_t r = std::bit_ceil(lo); r <= hi; r <<= 1) out.push_back(static_cast<std::uint32_t>(r));
    return out;
  }
  std::vector<std::uint32_t> out;
  std::size_t start = 0;
  while (start <= spec.size()) {
    const auto comma = spec.find(',', start);
    out.push_back(parse_power(spec.substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

sim::PipelineConfig load_config(const std::string& path) {
  return path.empty() ? sim::PipelineConfig{} : io::load_sim_config(path);
}

void write_rows(const std::string& path, const std::vector<io::CsvRow>& rows) {
  if (path.empty() || path == "-") {
    io::write_csv(std::cout, rows);
    return;
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  io::write_csv(out, rows);
}

PbConfig pb_config(const EdgeList& el, std::uint64_t bin_range, unsigned threads) {
  const std::uint64_t range = std::max<std::uint64_t>(el.num_vertices, 1);
  return PbConfig::make(range, bin_range == 0 ? range : bin_range, threads);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pbkit: propagation blocking graph kernels and cache-hierarchy simulator"};
  app.require_subcommand(1);

  // convert
  std::string in, out, mode = "baseline";
  std::uint64_t bin_range = 0;
  unsigned threads = 1;
  auto* convert = app.add_subcommand("convert", "Edge list to CSR1");
  convert->add_option("--in", in, "Input graph (text, COO1 or CSR1)")->required()->check(CLI::ExistingFile);
  convert->add_option("--out", out, "Output CSR1 file")->required();
  convert->add_option("--mode", mode, "baseline or pb")->check(CLI::IsMember({"baseline", "pb"}));
  convert->add_option("--bin-range", bin_range, "PB bin range (0 = one bin)");
  convert->add_option("--threads", threads, "Worker threads")->check(CLI::Range(1u, 1024u));

  // reorder
  auto* reorder = app.add_subcommand("reorder", "Relabel vertices by descending degree");
  reorder->add_option("--in", in, "Input CSR1")->required()->check(CLI::ExistingFile);
  reorder->add_option("--out", out, "Output CSR1")->required();

  // pagerank
  std::string graph;
  int iters = 20;
  double tolerance = 0;
  std::size_t top = 5;
  auto* pagerank = app.add_subcommand("pagerank", "Native PageRank");
  pagerank->add_option("--graph", graph, "Input graph")->required()->check(CLI::ExistingFile);
  pagerank->add_option("--mode", mode, "baseline or pb")->check(CLI::IsMember({"baseline", "pb"}));
  pagerank->add_option("--bin-range", bin_range, "PB bin range (0 = one bin)");
  pagerank->add_option("--iters", iters, "Iterations")->check(CLI::Range(1, 100000));
  pagerank->add_option("--tolerance", tolerance, "Stop early below this L1 change (0 = never)");
  pagerank->add_option("--top", top, "Print the highest ranked vertices");

  // sweep
  std::string workload = "neighpop", ranges = "2^4..2^18", csv, config, phase = "all";
  auto* sweep = app.add_subcommand("sweep", "Simulated PB bin-range sweep");
  sweep->add_option("--workload", workload, "neighpop or pagerank")
      ->check(CLI::IsMember({"neighpop", "pagerank"}));
  sweep->add_option("--graph", graph, "Input graph")->required()->check(CLI::ExistingFile);
  sweep->add_option("--bin-ranges", ranges, "2^a..2^b or a comma list");
  sweep->add_option("--csv", csv, "CSV output (default stdout)");
  sweep->add_option("--config", config, "Simulator config file")->check(CLI::ExistingFile);
  sweep->add_option("--phase", phase, "binning, binread or all")
      ->check(CLI::IsMember({"binning", "binread", "all"}));

  // simulate
  std::string sim_ranges;
  auto* simulate = app.add_subcommand("simulate", "Simulated workload run");
  simulate->add_option("--workload", workload, "neighpop, pagerank, edgelist-pagerank, end-to-end")
      ->check(CLI::IsMember({"neighpop", "pagerank", "edgelist-pagerank", "end-to-end"}));
  simulate->add_option("--graph", graph, "Input graph")->required()->check(CLI::ExistingFile);
  simulate->add_option("--mode", mode, "baseline, pb, pb-ideal or cobra")
      ->check(CLI::IsMember({"baseline", "pb", "pb-ideal", "pb_ideal", "cobra"}));
  simulate->add_option("--bin-range", bin_range, "PB bin range");
  simulate->add_option("--sweep", sim_ranges, "Bin ranges searched by pb-ideal");
  simulate->add_option("--config", config, "Simulator config file")->check(CLI::ExistingFile);
  simulate->add_option("--csv", csv, "CSV output (default stdout)");

  // generate
  std::string kind = "kron", format = "coo";
  unsigned scale = 16, degree = 8;
  std::uint64_t seed = 1;
  auto* generate = app.add_subcommand("generate", "Synthetic graph");
  generate->add_option("--kind", kind, "kron or urnd")->check(CLI::IsMember({"kron", "urnd"}));
  generate->add_option("--scale", scale, "log2 of the vertex count")->check(CLI::Range(0u, 30u));
  generate->add_option("--degree", degree, "Average degree");
  generate->add_option("--seed", seed, "Seed");
  generate->add_option("--out", out, "Output file")->required();
  generate->add_option("--format", format, "coo or text")->check(CLI::IsMember({"coo", "text"}));

  // validate
  auto* validate = app.add_subcommand("validate", "Check CSR1 invariants");
  validate->add_option("--in", in, "CSR1 file")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*convert) {
      if (mode == "baseline" && bin_range != 0) {
        throw std::invalid_argument("--bin-range only applies to --mode pb");
      }
      const EdgeList el = io::load_any_edgelist(in);
      const auto start = Clock::now();
      const CsrGraph g = mode == "pb"
                             ? neighpop_pb(el, pb_config(el, bin_range, threads))
                             : csr_from_edgelist_baseline(
                                   el, threads > 1 ? FillMode::parallel : FillMode::sequential, threads);
      const auto ns = elapsed_ns(start);
      io::save_csr(out, g);
      std::cout << "convert " << mode << ": V=" << g.num_vertices << " E=" << g.num_edges()
                << " wall_ms=" << ns / 1e6 << '\n';
    } else if (*reorder) {
      const CsrGraph g = io::load_csr(in);
      const Permutation p = degree_sort_permutation(g);
      const EdgeList el = apply_permutation(edgelist_from_csr(g), p);
      io::save_csr(out, csr_from_edgelist_baseline(el));
      std::cout << "reorder: V=" << g.num_vertices << " E=" << g.num_edges() << '\n';
    } else if (*pagerank) {
      if (mode == "baseline" && bin_range != 0) {
        throw std::invalid_argument("--bin-range only applies to --mode pb");
      }
      const EdgeList el = io::load_any_edgelist(graph);
      const CsrGraph csr = csr_from_edgelist_baseline(el);
      PageRankParams params;
      params.max_iters = iters;
      params.tolerance = tolerance;
      const auto start = Clock::now();
      const PageRankResult r = mode == "pb"
                                   ? pagerank_pb(csr, params, pb_config(el, bin_range, 1))
                                   : pagerank_baseline(csr, csc_from_edgelist(el), params);
      const auto ns = elapsed_ns(start);
      std::cout << "pagerank " << mode << ": iterations=" << r.iterations
                << " wall_ms=" << ns / 1e6 << '\n';
      std::vector<vertex_t> order(r.ranks.size());
      std::iota(order.begin(), order.end(), vertex_t{0});
      const std::size_t k = std::min(top, order.size());
      std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                        [&](vertex_t a, vertex_t b) { return r.ranks[a] > r.ranks[b]; });
      for (std::size_t i = 0; i < k; ++i) std::cout << order[i] << ' ' << r.ranks[order[i]] << '\n';
    } else if (*sweep) {
      const EdgeList el = io::load_any_edgelist(graph);
      const auto cfg = load_config(config);
      const auto list = parse_bin_ranges(ranges);
      const auto w = sim::parse_workload(workload);
      std::vector<io::CsvRow> rows;
      for (std::uint32_t r : list) {
        const auto start = Clock::now();
        const auto point = sim::sweep_bin_ranges(el, w, std::span(&r, 1), cfg).front();
        const auto ns = elapsed_ns(start);
        const sim::SimStats s = phase == "binning" ? point.binning
                                : phase == "binread" ? point.binread
                                                     : point.total();
        const std::string label = phase == "all" ? "pb" : "pb." + phase;
        for (auto& row : io::rows_for(workload, label, r, s, cfg.levels, ns)) rows.push_back(std::move(row));
      }
      write_rows(csv, rows);
    } else if (*simulate) {
      const EdgeList el = io::load_any_edgelist(graph);
      auto cfg = load_config(config);
      if (bin_range != 0) cfg.bin_range = static_cast<std::uint32_t>(bin_range);
      if (!sim_ranges.empty()) cfg.sweep_bin_ranges = parse_bin_ranges(sim_ranges);
      const auto m = sim::parse_mode(mode);
      if (m != sim::Mode::pb && bin_range != 0) {
        throw std::invalid_argument("--bin-range only applies to --mode pb");
      }
      if (m != sim::Mode::pb_ideal && !sim_ranges.empty()) {
        throw std::invalid_argument("--sweep only applies to --mode pb-ideal");
      }
      const auto start = Clock::now();
      const auto res = sim::simulate_pipeline(el, sim::parse_workload(workload), m, cfg);
      const auto ns = elapsed_ns(start);
      const std::uint64_t reported_range = m == sim::Mode::pb ? cfg.bin_range
                                           : res.cobra         ? res.cobra->memory_bin_range()
                                                               : 0;
      write_rows(csv, io::rows_for(workload, sim::to_string(m), reported_range, res.total(),
                                   cfg.levels, ns));
      if (res.cobra) {
        for (const auto& w : res.cobra->warnings) std::cerr << "warning: " << w << '\n';
      }
    } else if (*generate) {
      const EdgeList el = io::generate_graph(io::parse_graph_kind(kind), scale, degree, seed);
      if (format == "text") io::save_edgelist_text(out, el);
      else io::save_coo(out, el);
      std::cout << "generate " << kind << ": V=" << el.num_vertices << " E=" << el.num_edges() << '\n';
    } else if (*validate) {
      CsrGraph g;
      try {
        g = io::load_csr(in);
      } catch (const FormatError& e) {
        std::cout << "invalid: " << e.what() << '\n';
        return 1;
      }
      std::cout << "ok: V=" << g.num_vertices << " E=" << g.num_edges() << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
