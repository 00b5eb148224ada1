#pragma once

#include <stdexcept>
#include <string>

namespace qlm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fields defined on incompatible grids or with mismatched array shapes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition does not hold. `node` is the flattened
/// (theta-major) grid index of the first offending node, or -1.
class PreconditionError : public Error {
 public:
  explicit PreconditionError(const std::string& what, long node = -1)
      : Error(what), node_(node) {}
  long node() const noexcept { return node_; }

 private:
  long node_;
};

/// Degenerate or non-spacelike geometry encountered while evaluating a surface.
class GeometryError : public Error {
 public:
  explicit GeometryError(const std::string& what, long node = -1)
      : Error(what), node_(node) {}
  long node() const noexcept { return node_; }

 private:
  long node_;
};

/// Parameter outside the domain of a closed-form construction.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed or unreadable input file.
class InputError : public Error {
 public:
  using Error::Error;
};

/// An iterative solver failed to reach its tolerance.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace qlm
