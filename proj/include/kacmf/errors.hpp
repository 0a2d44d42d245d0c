#pragma once

#include <stdexcept>
#include <string>

namespace kacmf {

// Bad user input: config files, CLI values, out-of-range parameters.
struct config_error : std::runtime_error {
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure: quadrature disagreement, invariant violation.
struct numeric_error : std::runtime_error {
  explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace kacmf
