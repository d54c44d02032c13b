#pragma once

#include <stdexcept>
#include <string>

namespace causnet {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad CSV, unknown column, inconsistent schema.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Out-of-range node index or an invalid graph.
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// Argument outside a function's mathematical domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A numerical routine failed (non-convergence, singular matrix).
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Screening left no associated variables at the requested cutoff.
class EmptyFeasSetError : public Error {
 public:
  using Error::Error;
};

/// The reachable-subset table would exceed its configured limit.
class SearchLimitError : public Error {
 public:
  using Error::Error;
};

}  // namespace causnet
