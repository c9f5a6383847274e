#pragma once

#include <stdexcept>
#include <string>

namespace coshare {

/// Malformed input, bad identifiers, invalid configuration.
class InputError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Estimation could not produce a fit (separation, rank deficiency, size limits).
class EstimationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Simulated networks collapsed to empty or complete graphs.
class DegeneracyError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

} // namespace coshare
