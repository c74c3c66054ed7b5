#pragma once

#include <stdexcept>
#include <string>

namespace qfb {

/// An argument lies outside the domain of the operation (q outside (0,1), z < 0, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A series or product failed to converge, or the base makes it divergent.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two lattice functions (or a lattice function and an integral) use different bases.
class BaseMismatchError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// No sign change could be isolated while searching for a zero.
class ScanExhaustedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qfb
