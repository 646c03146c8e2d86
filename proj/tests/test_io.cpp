#include <doctest.h>

#include <fstream>
#include <iterator>
#include <random>
#include <sstream>

#include "pbkit/error.hpp"
#include "pbkit/io.hpp"
#include "support.hpp"

using namespace pbkit;
using namespace pbkit::io;

namespace {

EdgeList parse(const std::string& text, std::optional<std::uint64_t> v = {}) {
  std::istringstream in(text);
  return parse_edgelist_text(in, v);
}

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const FormatError& e) {
    return e.what();
  }
  return "";
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

}  // namespace

TEST_CASE("text edge lists") {
  const EdgeList a = parse("0 1\n1 0\n");
  CHECK(a.num_vertices == 2);
  CHECK(a.edges == std::vector<Edge>{{0, 1}, {1, 0}});

  const EdgeList b = parse("# comment\n0 2\n");
  CHECK(b.num_vertices == 3);
  CHECK(b.edges.size() == 1);

  const EdgeList c = parse("% mm style\n\n  3\t4  \r\n");
  CHECK(c.num_vertices == 5);
  CHECK(c.edges == std::vector<Edge>{{3, 4}});

  CHECK(parse("").num_vertices == 0);
  CHECK(parse("0 1\n", 10).num_vertices == 10);
  CHECK_THROWS_AS(parse("0 5\n", 3), std::out_of_range);
}

TEST_CASE("text parser reports the offending line") {
  CHECK(error_of("0 1\n1 x\n").rfind("line 2:", 0) == 0);
  CHECK(error_of("# c\n\n7\n").rfind("line 3:", 0) == 0);
  CHECK(error_of("0 1 2\n").rfind("line 1:", 0) == 0);
  CHECK(error_of("1 -2\n").rfind("line 1:", 0) == 0);
  CHECK(error_of("0 1\n0 4294967295\n").find("line 2: vertex id overflow") == 0);
  CHECK(error_of("99999999999999999999999 1\n").find("overflow") != std::string::npos);
  CHECK(error_of("0 4294967294\n").empty());
}

TEST_CASE("COO1 layout") {
  testsupport::TempDir dir("coo");
  save_coo(dir / "e.coo", EdgeList{0, {}});
  CHECK(std::filesystem::file_size(dir / "e.coo") == 20);

  save_coo(dir / "g.coo", EdgeList{3, {{1, 2}}});
  const std::string bytes = slurp(dir / "g.coo");
  const std::string want("COO1\x03\0\0\0\0\0\0\0\x01\0\0\0\0\0\0\0\x01\0\0\0\x02\0\0\0", 28);
  CHECK(bytes == want);
}

TEST_CASE("CSR1 layout") {
  testsupport::TempDir dir("csr");
  const CsrGraph g = csr_from_edgelist_baseline(EdgeList{2, {{0, 1}}});
  save_csr(dir / "g.csr", g);
  const std::string bytes = slurp(dir / "g.csr");
  CHECK(bytes.size() == 4 + 8 + 8 + 3 * 8 + 4);
  CHECK(bytes.substr(0, 4) == "CSR1");
  CHECK(load_csr(dir / "g.csr") == g);
}

TEST_CASE("binary round-trips are byte-identical") {
  testsupport::TempDir dir("rt");
  std::mt19937_64 rng(5);
  for (int i = 0; i < 20; ++i) {
    const EdgeList el = testsupport::random_graph(rng, 1 + rng() % 500, rng() % 3000);
    save_coo(dir / "a.coo", el);
    const EdgeList back = load_coo(dir / "a.coo");
    CHECK(back == el);
    save_coo(dir / "b.coo", back);
    CHECK(slurp(dir / "a.coo") == slurp(dir / "b.coo"));

    const CsrGraph g = csr_from_edgelist_baseline(el);
    save_csr(dir / "a.csr", g);
    save_csr(dir / "b.csr", load_csr(dir / "a.csr"));
    CHECK(slurp(dir / "a.csr") == slurp(dir / "b.csr"));

    save_edgelist_text(dir / "a.txt", el);
    CHECK(load_edgelist_text(dir / "a.txt", el.num_vertices) == el);
  }
}

TEST_CASE("binary load errors") {
  testsupport::TempDir dir("bad");
  save_coo(dir / "g.coo", EdgeList{4, {{0, 1}, {2, 3}}});
  std::string bytes = slurp(dir / "g.coo");

  std::string corrupt = bytes;
  corrupt[0] = 'X';
  spit(dir / "m.coo", corrupt);
  try {
    load_coo(dir / "m.coo");
    FAIL("expected an error");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()) == "bad magic");
  }

  spit(dir / "t.coo", bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(load_coo(dir / "t.coo"), FormatError);
  spit(dir / "h.coo", bytes.substr(0, 10));
  CHECK_THROWS_AS(load_coo(dir / "h.coo"), FormatError);

  // Offsets that go backwards.
  save_csr(dir / "g.csr", csr_from_edgelist_baseline(EdgeList{2, {{0, 1}, {1, 0}}}));
  std::string csr = slurp(dir / "g.csr");
  csr[20 + 8] = 5;
  spit(dir / "v.csr", csr);
  try {
    load_csr(dir / "v.csr");
    FAIL("expected an error");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).rfind("invalid CSR", 0) == 0);
  }
  CHECK_THROWS(load_coo(dir / "missing.coo"));
}

TEST_CASE("format detection") {
  testsupport::TempDir dir("fmt");
  const EdgeList el{3, {{0, 1}, {1, 2}}};
  save_coo(dir / "g.coo", el);
  save_csr(dir / "g.csr", csr_from_edgelist_baseline(el));
  save_edgelist_text(dir / "g.txt", el);
  CHECK(detect_format(dir / "g.coo") == GraphFormat::coo);
  CHECK(detect_format(dir / "g.csr") == GraphFormat::csr);
  CHECK(detect_format(dir / "g.txt") == GraphFormat::text);
  CHECK(load_any_edgelist(dir / "g.coo") == el);
  CHECK(load_any_edgelist(dir / "g.csr") == el);
  CHECK(load_any_edgelist(dir / "g.txt") == el);
}

TEST_CASE("generators") {
  const EdgeList u = generate_graph(GraphKind::urnd, 4, 2, 7);
  CHECK(u.num_vertices == 16);
  CHECK(u.edges.size() == 32);
  for (const Edge& e : u.edges) CHECK((e.src < 16 && e.dst < 16));
  CHECK(generate_graph(GraphKind::urnd, 4, 2, 7) == u);
  CHECK_FALSE(generate_graph(GraphKind::urnd, 4, 2, 8) == u);

  const EdgeList k = generate_graph(GraphKind::kron, 16, 8, 1);
  CHECK(k.edges.size() == 8u << 16);
  CHECK(generate_graph(GraphKind::kron, 16, 8, 1) == k);
  std::vector<std::uint64_t> deg(k.num_vertices, 0);
  for (const Edge& e : k.edges) ++deg[e.src];
  const auto max_deg = *std::max_element(deg.begin(), deg.end());
  CHECK(max_deg >= 10 * 8);

  CHECK(parse_graph_kind("kron") == GraphKind::kron);
  CHECK_THROWS_AS(parse_graph_kind("mesh"), std::invalid_argument);
  CHECK_THROWS(generate_graph(GraphKind::urnd, 31, 1, 0));
}

TEST_CASE("simulator config files") {
  std::istringstream in(
      "# small machine\n"
      "l1.capacity = 4K\n"
      "l2.capacity = 32K\n"
      "l3.capacity = 256K\n"
      "l3.latency = 30\n"
      "dram.latency = 150\n"
      "cobra.partition_fraction = 0.5\n"
      "pagerank.iters = 7\n");
  const auto cfg = parse_sim_config(in);
  CHECK(cfg.levels[0].capacity_bytes == 4096);
  CHECK(cfg.levels[2].capacity_bytes == 256 * 1024);
  CHECK(cfg.cost.hit_latency[2] == 30);
  CHECK(cfg.cost.dram_latency == 150);
  CHECK(cfg.partition_fraction == 0.5);
  CHECK(cfg.pagerank_iters == 7);

  std::istringstream two("levels = 2\n");
  CHECK(parse_sim_config(two).levels.size() == 2);

  for (const char* bad : {"l1.size = 4K\n", "nonsense\n", "l1.capacity = 4Q\n", "cobra.partition_fraction = 1\n",
                          "l1.assoc = 3\n"}) {
    std::istringstream b(bad);
    CHECK_THROWS(parse_sim_config(b));
  }
}

TEST_CASE("CSV golden output") {
  sim::SimStats s;
  s.levels.resize(2);
  s.levels[0] = {90, 10};
  s.levels[1] = {4, 6};
  s.instructions = 100;
  s.cycles = 1234;
  const std::vector<sim::CacheLevelConfig> lv{{"L1", 32768, 8, 64, 0}, {"L2", 262144, 8, 64, 0}};
  const auto rows = rows_for("neighpop", "pb", 64, s, lv, 0);
  REQUIRE(rows.size() == 2);
  std::ostringstream out;
  write_csv(out, rows);
  const std::string dram = std::to_string(s.dram_lines());
  CHECK(out.str() == "workload,mode,bin_range,level,hits,misses,dram_lines,instr,cycles,wall_ns\n"
                     "neighpop,pb,64,L1,90,10," + dram + ",100,1234,0\n"
                     "neighpop,pb,64,L2,4,6," + dram + ",100,1234,0\n");
}

TEST_CASE("report speedups need a baseline") {
  sim::SimStats base;
  base.cycles = 300;
  sim::SimStats fast;
  fast.cycles = 100;

  BenchmarkReport r;
  r.add({"neighpop", "baseline", "", 0, base, {}});
  r.add({"neighpop", "pb", "", 0, fast, {}});
  r.add({"pagerank", "pb", "", 0, fast, {}});
  r.finalize();
  REQUIRE(r.entries()[1].speedup.has_value());
  CHECK(*r.entries()[1].speedup == doctest::Approx(3.0));
  CHECK(*r.entries()[0].speedup == doctest::Approx(1.0));
  CHECK_FALSE(r.entries()[2].speedup.has_value());

  BenchmarkReport native;
  native.add({"convert", "baseline", "", 2000, {}, {}});
  native.add({"convert", "pb", "", 1000, {}, {}});
  native.finalize();
  CHECK(*native.entries()[1].speedup == doctest::Approx(2.0));
  std::ostringstream out;
  native.print(out);
  CHECK(out.str().find("speedup=2.000x") != std::string::npos);
}
