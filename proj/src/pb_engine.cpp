#include "pbkit/pb_engine.hpp"

#include <algorithm>
#include <iostream>
#include <stdexcept>
#include <string>

namespace pbkit {

PbConfig PbConfig::make(std::uint64_t index_range, std::uint64_t bin_range, unsigned num_threads,
                        std::uint32_t line_size) {
  if (bin_range == 0) throw std::invalid_argument("bin range must be >= 1");
  const std::uint64_t rounded = std::bit_ceil(bin_range);
  if (rounded > (1ull << 31)) throw std::invalid_argument("bin range too large");
  if (rounded != bin_range) {
    std::cerr << "warning: bin range " << bin_range << " rounded up to " << rounded << '\n';
  }
  PbConfig cfg;
  cfg.index_range = index_range;
  cfg.bin_range = static_cast<std::uint32_t>(rounded);
  cfg.num_threads = std::max(1u, num_threads);
  cfg.line_size = line_size;
  cfg.check();
  return cfg;
}

void PbConfig::check() const {
  if (bin_range == 0 || !std::has_single_bit(bin_range)) {
    throw std::invalid_argument("bin range must be a power of two, got " +
                                std::to_string(bin_range));
  }
  if (num_threads == 0) throw std::invalid_argument("num_threads must be >= 1");
  if (line_size < sizeof(UpdateTuple) || line_size % sizeof(UpdateTuple) != 0) {
    throw std::invalid_argument("line size must be a multiple of the tuple size");
  }
}

void Bin::append(std::span<const UpdateTuple> tuples) {
  while (!tuples.empty()) {
    if (chunks_.empty() || chunks_.back().size() == chunks_.back().capacity()) {
      const std::size_t next =
          chunks_.empty() ? 8 : std::min(chunks_.back().capacity() * 2, max_chunk_tuples);
      chunks_.emplace_back().reserve(next);
    }
    auto& chunk = chunks_.back();
    const std::size_t take = std::min(tuples.size(), chunk.capacity() - chunk.size());
    chunk.insert(chunk.end(), tuples.begin(), tuples.begin() + static_cast<std::ptrdiff_t>(take));
    tuples = tuples.subspan(take);
    size_ += take;
  }
}

std::vector<UpdateTuple> Bin::to_vector() const {
  std::vector<UpdateTuple> out;
  out.reserve(size_);
  for_each([&](const UpdateTuple& t) { out.push_back(t); });
  return out;
}

std::size_t BinSet::total_tuples() const {
  std::size_t total = 0;
  for (const Bin& b : bins_) total += b.size();
  return total;
}

ThreadBinner::ThreadBinner(BinSet& bins, unsigned tid, const PbConfig& cfg)
    : bins_(bins), tid_(tid), shift_(cfg.bin_shift()) {
  const std::size_t capacity = cfg.buffer_capacity();
  storage_.resize(bins.num_bins() * capacity);
  buffers_.reserve(bins.num_bins());
  for (std::uint64_t b = 0; b < bins.num_bins(); ++b) {
    buffers_.emplace_back(std::span(storage_).subspan(b * capacity, capacity));
  }
}

void ThreadBinner::flush() {
  for (std::uint64_t b = 0; b < buffers_.size(); ++b) {
    if (buffers_[b].occupancy() > 0) buffers_[b].drain_into(bins_.at(tid_, b));
  }
}

BinningResult binning_phase(std::span<const UpdateTuple> updates, const PbConfig& cfg,
                            const CostModel& cost) {
  for (const UpdateTuple& t : updates) {
    if (t.index >= cfg.index_range) {
      throw std::out_of_range("update index " + std::to_string(t.index) +
                              " >= index range " + std::to_string(cfg.index_range));
    }
  }
  return binning_phase_with(
      updates.size(), cfg,
      [&](ThreadBinner& binner, std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) binner.push(updates[i]);
      },
      cost);
}

}  // namespace pbkit
