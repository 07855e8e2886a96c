#pragma once

#include <stdexcept>
#include <string>

namespace chernoff_heat {

/// Bad input: non-finite values, out-of-domain parameters, mismatched grids.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The quadrature grid is too coarse for the requested Gaussian bandwidth.
class ResolutionError : public std::runtime_error {
 public:
  ResolutionError(const std::string& what, int min_level)
      : std::runtime_error(what), min_level_(min_level) {}

  /// Smallest level that would pass the guard, or -1 if none is affordable.
  int min_level() const noexcept { return min_level_; }

 private:
  int min_level_;
};

/// A series representation did not reach its tolerance within max_terms.
class TruncationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rejection sampling gave up.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ResourceLimitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration could not be parsed or failed range validation.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A study or check cell failed; the message names the cell and the cause.
class CellError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace chernoff_heat
