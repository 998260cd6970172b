#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace subsvm {

// Malformed or invariant-violating input data (files, datasets, configs).
class DataError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// A solver failed to meet its contract (QP budget exhausted, instance too
// large for exhaustive search, ...).
class SolverError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Raised when a binary energy that must be graph-representable is not.
class NotSubmodularError : public SolverError {
public:
  NotSubmodularError(std::size_t edge, const std::string& what)
      : SolverError(what), edge_(edge) {}

  std::size_t edge() const noexcept { return edge_; }

private:
  std::size_t edge_;
};

} // namespace subsvm
