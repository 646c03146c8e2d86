#include <doctest.h>

#include <random>

#include "pbkit/io.hpp"
#include "pbkit/pipeline.hpp"
#include "support.hpp"

using namespace pbkit;
using namespace pbkit::sim;

namespace {

void check_chaining(const SimStats& s) {
  for (std::size_t i = 0; i + 1 < s.levels.size(); ++i) {
    REQUIRE(s.levels[i + 1].accesses() == s.levels[i].misses);
  }
}

PipelineConfig quick() {
  PipelineConfig cfg;
  cfg.pagerank_iters = 3;
  return cfg;
}

}  // namespace

TEST_CASE("mode and workload names") {
  for (Mode m : {Mode::baseline, Mode::pb, Mode::pb_ideal, Mode::cobra}) CHECK(parse_mode(to_string(m)) == m);
  CHECK(parse_mode("pb-ideal") == Mode::pb_ideal);
  for (Workload w : {Workload::neighpop, Workload::pagerank, Workload::edgelist_pagerank, Workload::end_to_end}) {
    CHECK(parse_workload(to_string(w)) == w);
  }
  CHECK_THROWS_AS(parse_mode("fast"), std::invalid_argument);
  CHECK(power_of_two_range(2, 4) == std::vector<std::uint32_t>{4, 8, 16});
}

TEST_CASE("one-bin pb is the baseline plus buffering") {
  std::mt19937_64 rng(1);
  const EdgeList el = testsupport::random_graph(rng, 256, 2000);
  PipelineConfig cfg = quick();
  cfg.bin_range = 256;
  const auto base = simulate_pipeline(el, Workload::neighpop, Mode::baseline, cfg).total();
  const auto pb = simulate_pipeline(el, Workload::neighpop, Mode::pb, cfg).total();
  // Bin-read issues the baseline's offsets/neighbors accesses; binning is extra.
  CHECK(pb.cycles > base.cycles);
  CHECK(pb.instructions == el.edges.size() * (cfg.cost.pb_binning_ops + cfg.cost.binread_ops));
  CHECK(base.instructions == el.edges.size() * cfg.cost.update_ops);
}

TEST_CASE("pb_ideal is never worse than any single bin range") {
  const EdgeList el = io::generate_graph(io::GraphKind::kron, 12, 8, 3);
  PipelineConfig cfg = quick();
  cfg.sweep_bin_ranges = power_of_two_range(0, 12);
  for (Workload w : {Workload::neighpop, Workload::pagerank}) {
    const auto sweep = sweep_bin_ranges(el, w, cfg.sweep_bin_ranges, cfg);
    const auto ideal = simulate_pipeline(el, w, Mode::pb_ideal, cfg).total();
    for (const auto& p : sweep) CHECK(ideal.cycles <= p.total().cycles);
    CHECK(sweep[best_sweep_point(sweep)].total().cycles >= ideal.cycles);
  }
}

TEST_CASE("cobra beats pb_ideal once the graph exceeds the LLC") {
  const EdgeList el = io::generate_graph(io::GraphKind::urnd, 16, 8, 5);
  PipelineConfig cfg = quick();
  cfg.sweep_bin_ranges = power_of_two_range(6, 16);
  const auto cobra = simulate_pipeline(el, Workload::neighpop, Mode::cobra, cfg);
  const auto ideal = simulate_pipeline(el, Workload::neighpop, Mode::pb_ideal, cfg);
  CHECK(cobra.total().cycles < ideal.total().cycles);
  REQUIRE(cobra.cobra.has_value());
  CHECK(cobra.phase_total("binning").instructions == el.edges.size());
}

TEST_CASE("every workload and mode keeps level chaining") {
  std::mt19937_64 rng(2);
  const EdgeList el = testsupport::random_graph(rng, 3000, 20000);
  PipelineConfig cfg = quick();
  cfg.bin_range = 64;
  cfg.sweep_bin_ranges = {16, 256};
  for (Workload w : {Workload::neighpop, Workload::pagerank, Workload::end_to_end}) {
    for (Mode m : {Mode::baseline, Mode::pb, Mode::cobra}) {
      const auto r = simulate_pipeline(el, w, m, cfg);
      for (const auto& p : r.phases) check_chaining(p.stats);
    }
  }
  check_chaining(simulate_pipeline(el, Workload::edgelist_pagerank, Mode::baseline, cfg).total());
  CHECK_THROWS_AS(simulate_pipeline(el, Workload::edgelist_pagerank, Mode::pb, cfg), std::invalid_argument);
}

TEST_CASE("iteration extrapolation matches full simulation for a repeating trace") {
  std::mt19937_64 rng(6);
  const EdgeList el = testsupport::random_graph(rng, 2000, 10000);
  PipelineConfig all = quick();
  all.pagerank_iters = 5;
  all.simulated_iters = 0;
  PipelineConfig two = all;
  two.simulated_iters = 2;
  const auto full = simulate_pipeline(el, Workload::pagerank, Mode::baseline, all).total();
  const auto approx = simulate_pipeline(el, Workload::pagerank, Mode::baseline, two).total();
  CHECK(full.instructions == approx.instructions);
  // Warm iterations are identical once the first has loaded the caches.
  CHECK(full.cycles == approx.cycles);
}

TEST_CASE("pipeline runs are deterministic") {
  std::mt19937_64 rng(3);
  const EdgeList el = testsupport::random_graph(rng, 5000, 30000);
  PipelineConfig cfg = quick();
  cfg.bin_range = 128;
  for (Mode m : {Mode::baseline, Mode::pb, Mode::cobra}) {
    CHECK(simulate_pipeline(el, Workload::end_to_end, m, cfg).total() ==
          simulate_pipeline(el, Workload::end_to_end, m, cfg).total());
  }
}

TEST_CASE("sweep argument checks") {
  const EdgeList el{4, {{0, 1}}};
  const std::vector<std::uint32_t> none;
  CHECK_THROWS_AS(sweep_bin_ranges(el, Workload::neighpop, none, {}), std::invalid_argument);
  const std::vector<std::uint32_t> r{4};
  CHECK_THROWS_AS(sweep_bin_ranges(el, Workload::end_to_end, r, {}), std::invalid_argument);
}
