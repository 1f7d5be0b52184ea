#pragma once

#include <stdexcept>

namespace tkrr {

/// Precondition violated by the caller (bad size, range, or shape).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The numerics could not produce a trustworthy answer (eigensolver did not
/// converge, matrix is not positive semidefinite after flooring, ...).
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A spectral filter or basis function would divide by a zero eigenvalue.
class DegeneracyError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tkrr
