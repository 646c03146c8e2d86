#include "pbkit/io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "le_io.hpp"
#include "pbkit/error.hpp"

namespace pbkit::io {

namespace {

constexpr std::array<char, 4> kCooMagic{'C', 'O', 'O', '1'};
constexpr std::array<char, 4> kCsrMagic{'C', 'S', 'R', '1'};
constexpr std::uint64_t kMaxId = max_vertices - 1;

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void expect_magic(std::istream& in, const std::array<char, 4>& magic) {
  std::array<char, 4> got{};
  in.read(got.data(), got.size());
  if (in.gcount() != 4 || got != magic) throw FormatError("bad magic");
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

FormatError line_error(std::size_t line, const std::string& what) {
  return FormatError("line " + std::to_string(line) + ": " + what);
}

std::uint64_t parse_id(std::string_view tok, std::size_t line) {
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec == std::errc::result_out_of_range) throw line_error(line, "vertex id overflow");
  if (ec != std::errc{} || p != tok.data() + tok.size()) {
    throw line_error(line, "expected two decimal vertex ids, got '" + std::string(tok) + "'");
  }
  if (v > kMaxId) throw line_error(line, "vertex id overflow");
  return v;
}

template <class T>
void reserve_bounded(std::vector<T>& v, std::uint64_t n) {
  // Header counts are untrusted; grow past this as data actually arrives.
  v.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(n, 1u << 20)));
}

}  // namespace

// --- text ------------------------------------------------------------------

EdgeList parse_edgelist_text(std::istream& in, std::optional<std::uint64_t> num_vertices) {
  EdgeList el;
  std::string raw;
  std::size_t line = 0;
  std::uint64_t max_id = 0;
  bool any = false;
  while (std::getline(in, raw)) {
    ++line;
    const std::string_view s = trim(raw);
    if (s.empty() || s.front() == '#' || s.front() == '%') continue;
    const auto gap = s.find_first_of(" \t");
    if (gap == std::string_view::npos) throw line_error(line, "expected two vertex ids");
    const std::string_view a = s.substr(0, gap);
    const std::string_view b = trim(s.substr(gap));
    if (b.find_first_of(" \t") != std::string_view::npos) {
      throw line_error(line, "expected two vertex ids, found more");
    }
    const std::uint64_t src = parse_id(a, line);
    const std::uint64_t dst = parse_id(b, line);
    max_id = std::max({max_id, src, dst});
    any = true;
    el.edges.push_back({static_cast<vertex_t>(src), static_cast<vertex_t>(dst)});
  }
  const std::uint64_t implied = any ? max_id + 1 : 0;
  if (num_vertices) {
    if (*num_vertices > max_vertices) throw std::out_of_range("vertex count exceeds 32-bit ids");
    if (*num_vertices < implied) {
      throw std::out_of_range("vertex count " + std::to_string(*num_vertices) +
                              " is smaller than 1 + max id (" + std::to_string(implied) + ")");
    }
    el.num_vertices = static_cast<vertex_t>(*num_vertices);
  } else {
    el.num_vertices = static_cast<vertex_t>(implied);
  }
  return el;
}

EdgeList load_edgelist_text(const std::filesystem::path& path,
                            std::optional<std::uint64_t> num_vertices) {
  auto in = open_in(path);
  return parse_edgelist_text(in, num_vertices);
}

void save_edgelist_text(const std::filesystem::path& path, const EdgeList& el) {
  auto out = open_out(path);
  for (const Edge& e : el.edges) out << e.src << ' ' << e.dst << '\n';
}

// --- COO1 ------------------------------------------------------------------

void write_coo(std::ostream& out, const EdgeList& el) {
  out.write(kCooMagic.data(), kCooMagic.size());
  detail::put_le<std::uint64_t>(out, el.num_vertices);
  detail::put_le<std::uint64_t>(out, el.edges.size());
  for (const Edge& e : el.edges) {
    detail::put_le(out, e.src);
    detail::put_le(out, e.dst);
  }
}

EdgeList read_coo(std::istream& in) {
  expect_magic(in, kCooMagic);
  const auto v = detail::get_le<std::uint64_t>(in, "vertex count");
  const auto e = detail::get_le<std::uint64_t>(in, "edge count");
  if (v > max_vertices) throw FormatError("vertex count exceeds 32-bit ids");
  EdgeList el;
  el.num_vertices = static_cast<vertex_t>(v);
  reserve_bounded(el.edges, e);
  for (std::uint64_t i = 0; i < e; ++i) {
    const auto src = detail::get_le<std::uint32_t>(in, "edges");
    const auto dst = detail::get_le<std::uint32_t>(in, "edges");
    el.edges.push_back({src, dst});
  }
  try {
    el.check();
  } catch (const std::out_of_range& ex) {
    throw FormatError(ex.what());
  }
  return el;
}

void save_coo(const std::filesystem::path& path, const EdgeList& el) {
  auto out = open_out(path);
  write_coo(out, el);
}

EdgeList load_coo(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_coo(in);
}

// --- CSR1 ------------------------------------------------------------------

void write_csr(std::ostream& out, const CsrGraph& g) {
  out.write(kCsrMagic.data(), kCsrMagic.size());
  detail::put_le<std::uint64_t>(out, g.num_vertices);
  detail::put_le<std::uint64_t>(out, g.neighbors.size());
  for (offset_t o : g.offsets) detail::put_le<std::uint64_t>(out, o);
  for (vertex_t n : g.neighbors) detail::put_le(out, n);
}

CsrGraph read_csr(std::istream& in) {
  expect_magic(in, kCsrMagic);
  const auto v = detail::get_le<std::uint64_t>(in, "vertex count");
  const auto e = detail::get_le<std::uint64_t>(in, "edge count");
  if (v > max_vertices) throw FormatError("vertex count exceeds 32-bit ids");
  CsrGraph g;
  g.num_vertices = static_cast<vertex_t>(v);
  g.offsets.clear();
  reserve_bounded(g.offsets, v + 1);
  for (std::uint64_t i = 0; i <= v; ++i) g.offsets.push_back(detail::get_le<std::uint64_t>(in, "offsets"));
  reserve_bounded(g.neighbors, e);
  for (std::uint64_t i = 0; i < e; ++i) g.neighbors.push_back(detail::get_le<std::uint32_t>(in, "neighbors"));
  if (auto bad = validate_csr(g)) throw FormatError("invalid CSR: " + bad->message);
  return g;
}

void save_csr(const std::filesystem::path& path, const CsrGraph& g) {
  auto out = open_out(path);
  write_csr(out, g);
}

CsrGraph load_csr(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_csr(in);
}

GraphFormat detect_format(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::array<char, 4> head{};
  in.read(head.data(), head.size());
  if (in.gcount() == 4 && head == kCooMagic) return GraphFormat::coo;
  if (in.gcount() == 4 && head == kCsrMagic) return GraphFormat::csr;
  return GraphFormat::text;
}

EdgeList load_any_edgelist(const std::filesystem::path& path) {
  switch (detect_format(path)) {
    case GraphFormat::coo: return load_coo(path);
    case GraphFormat::csr: return edgelist_from_csr(load_csr(path));
    case GraphFormat::text: break;
  }
  return load_edgelist_text(path);
}

GraphKind parse_graph_kind(std::string_view s) {
  if (s == "kron") return GraphKind::kron;
  if (s == "urnd") return GraphKind::urnd;
  throw std::invalid_argument("unknown graph kind '" + std::string(s) + "'");
}

// --- config ----------------------------------------------------------------

namespace {

std::uint64_t parse_size(const std::string& key, std::string_view v) {
  std::uint64_t mult = 1;
  if (!v.empty() && (v.back() == 'K' || v.back() == 'k')) mult = 1024;
  if (!v.empty() && (v.back() == 'M' || v.back() == 'm')) mult = 1024 * 1024;
  if (mult != 1) v.remove_suffix(1);
  std::uint64_t n = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), n);
  if (ec != std::errc{} || p != v.data() + v.size()) {
    throw std::invalid_argument("bad value for " + key + ": '" + std::string(v) + "'");
  }
  return n * mult;
}

double parse_real(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double d = 0;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) throw std::invalid_argument("bad value for " + key + ": '" + v + "'");
  return d;
}

}  // namespace

sim::PipelineConfig parse_sim_config(std::istream& in) {
  sim::PipelineConfig cfg;
  std::string raw;
  std::size_t line = 0;
  std::optional<std::size_t> num_levels;
  while (std::getline(in, raw)) {
    ++line;
    const std::string_view s = trim(raw);
    if (s.empty() || s.front() == '#') continue;
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) throw line_error(line, "expected key = value");
    const std::string key(trim(s.substr(0, eq)));
    const std::string value(trim(s.substr(eq + 1)));
    const auto u32 = [&] { return static_cast<std::uint32_t>(parse_size(key, value)); };

    if (key.size() > 3 && key[0] == 'l' && key[2] == '.' && key[1] >= '1' && key[1] <= '3') {
      const std::size_t i = static_cast<std::size_t>(key[1] - '1');
      const std::string field = key.substr(3);
      auto& level = cfg.levels.at(i);
      if (field == "capacity") level.capacity_bytes = parse_size(key, value);
      else if (field == "assoc") level.associativity = u32();
      else if (field == "line") level.line_size = u32();
      else if (field == "latency") cfg.cost.hit_latency.at(i) = u32();
      else throw line_error(line, "unknown key '" + key + "'");
    } else if (key == "levels") {
      num_levels = parse_size(key, value);
      if (*num_levels < 1 || *num_levels > 3) throw line_error(line, "levels must be 1..3");
    } else if (key == "dram.latency") {
      cfg.cost.dram_latency = u32();
    } else if (key == "stream_write_cycles") {
      cfg.cost.stream_write_cycles = u32();
    } else if (key == "ops.update") {
      cfg.cost.update_ops = u32();
    } else if (key == "ops.pb_binning") {
      cfg.cost.pb_binning_ops = u32();
    } else if (key == "ops.binupd") {
      cfg.cost.binupd_ops = u32();
    } else if (key == "ops.binread") {
      cfg.cost.binread_ops = u32();
    } else if (key == "ops.vertex") {
      cfg.cost.vertex_ops = u32();
    } else if (key == "engine.tuple_cycles") {
      cfg.cost.engine_tuple_cycles = u32();
    } else if (key == "cobra.partition_fraction") {
      cfg.partition_fraction = parse_real(key, value);
    } else if (key == "cobra.eviction_buffers") {
      cfg.eviction_buffer_depth = u32();
    } else if (key == "pagerank.iters") {
      cfg.pagerank_iters = static_cast<int>(u32());
    } else if (key == "pagerank.simulated_iters") {
      cfg.simulated_iters = static_cast<int>(u32());
    } else if (key == "bin_range") {
      cfg.bin_range = u32();
    } else {
      throw line_error(line, "unknown key '" + key + "'");
    }
  }
  if (num_levels) {
    cfg.levels.resize(*num_levels);
    cfg.cost.hit_latency.resize(*num_levels);
  }
  for (const auto& l : cfg.levels) l.check();
  if (cfg.partition_fraction <= 0 || cfg.partition_fraction >= 1) {
    throw std::invalid_argument("cobra.partition_fraction must be in (0, 1)");
  }
  if (cfg.eviction_buffer_depth == 0) throw std::invalid_argument("cobra.eviction_buffers must be >= 1");
  return cfg;
}

sim::PipelineConfig load_sim_config(const std::filesystem::path& path) {
  auto in = open_in(path);
  return parse_sim_config(in);
}

// --- reporting ---------------------------------------------------------------

std::vector<CsvRow> rows_for(std::string_view workload, std::string_view mode,
                             std::uint64_t bin_range, const sim::SimStats& stats,
                             std::span<const sim::CacheLevelConfig> levels, std::uint64_t wall_ns) {
  std::vector<CsvRow> rows;
  for (std::size_t i = 0; i < stats.levels.size(); ++i) {
    CsvRow r;
    r.workload = workload;
    r.mode = mode;
    r.bin_range = bin_range;
    r.level = i < levels.size() ? levels[i].name : "L" + std::to_string(i + 1);
    r.hits = stats.levels[i].hits;
    r.misses = stats.levels[i].misses;
    r.dram_lines = stats.dram_lines();
    r.instr = stats.instructions;
    r.cycles = stats.cycles;
    r.wall_ns = wall_ns;
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_csv(std::ostream& out, std::span<const CsvRow> rows) {
  out << csv_header << '\n';
  for (const CsvRow& r : rows) {
    out << r.workload << ',' << r.mode << ',' << r.bin_range << ',' << r.level << ',' << r.hits
        << ',' << r.misses << ',' << r.dram_lines << ',' << r.instr << ',' << r.cycles << ','
        << r.wall_ns << '\n';
  }
}

void BenchmarkReport::finalize() {
  for (auto& e : entries_) {
    e.speedup.reset();
    const auto base = std::find_if(entries_.begin(), entries_.end(), [&](const ReportEntry& b) {
      return b.workload == e.workload && b.mode == "baseline";
    });
    if (base == entries_.end()) continue;
    if (e.stats && base->stats && e.stats->cycles > 0) {
      e.speedup = static_cast<double>(base->stats->cycles) / static_cast<double>(e.stats->cycles);
    } else if (!e.stats && !base->stats && e.wall_ns > 0) {
      e.speedup = static_cast<double>(base->wall_ns) / static_cast<double>(e.wall_ns);
    }
  }
}

void BenchmarkReport::print(std::ostream& out) const {
  for (const auto& e : entries_) {
    out << std::left << std::setw(18) << e.workload << std::setw(10) << e.mode;
    if (e.stats) out << " cycles=" << e.stats->cycles << " instr=" << e.stats->instructions
                     << " dram_lines=" << e.stats->dram_lines();
    else out << " wall_ms=" << std::fixed << std::setprecision(3) << e.wall_ns / 1e6;
    if (e.speedup) out << " speedup=" << std::fixed << std::setprecision(3) << *e.speedup << 'x';
    if (!e.config.empty()) out << "  [" << e.config << ']';
    out << '\n';
  }
}

}  // namespace pbkit::io
