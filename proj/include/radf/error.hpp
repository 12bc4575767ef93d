#pragma once

#include <stdexcept>
#include <string>

namespace radf {

// Ingestion / schema / model-file problems. Maps to CLI exit code 3.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values where finite ones are required (divergence, broken
// oracle input). Maps to CLI exit code 4.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace radf
