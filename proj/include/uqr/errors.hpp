#pragma once

#include <stdexcept>

namespace uqr {

// Unusable input data: missing files, malformed CSV, degenerate columns.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Computation left the numerically valid domain: non-finite loss, variance
// below floor, invalid interval.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace uqr
