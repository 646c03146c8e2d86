#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "pbkit/error.hpp"

namespace pbkit::detail {

template <class T>
void put_le(std::ostream& out, T value) {
  std::array<char, sizeof(T)> bytes;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFF);
  }
  out.write(bytes.data(), bytes.size());
}

/// Returns false on a clean EOF before the first byte; throws on a partial read.
template <class T>
bool try_get_le(std::istream& in, T& value, const char* what) {
  std::array<unsigned char, sizeof(T)> bytes;
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  const auto got = static_cast<std::size_t>(in.gcount());
  if (got == 0) return false;
  if (got != sizeof(T)) throw FormatError(std::string("truncated file while reading ") + what);
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= std::uint64_t{bytes[i]} << (8 * i);
  value = static_cast<T>(v);
  return true;
}

template <class T>
T get_le(std::istream& in, const char* what) {
  T value{};
  if (!try_get_le(in, value, what)) {
    throw FormatError(std::string("truncated file while reading ") + what);
  }
  return value;
}

}  // namespace pbkit::detail
