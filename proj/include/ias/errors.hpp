#pragma once

#include <stdexcept>
#include <string>

namespace ias {

// Error taxonomy shared by the library and the CLI exit codes:
// ValidationError -> 2, ConvergenceError -> 3, DataError -> 4.

/// Malformed configuration or invariant-violating inputs.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Iterative procedure failed to reach its tolerance within its cap.
class ConvergenceError : public std::runtime_error {
 public:
  explicit ConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

/// Observed data inconsistent with the declared problem (e.g. an outcome
/// with zero likelihood under every hypothesis in the belief's support).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ias
