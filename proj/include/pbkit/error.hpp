#pragma once

#include <stdexcept>

namespace pbkit {

/// Malformed or truncated input file.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pbkit
