#pragma once

#include <stdexcept>
#include <string>

namespace tattnet {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Incompatible tensor shapes; the message names both shapes.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A caller broke an operation's precondition (non-scalar loss, bad label, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Softmax over a slice with no finite entry.
class DegenerateSliceError : public Error {
 public:
  using Error::Error;
};

/// Malformed input files, journey invariant violations, bad configs.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss.
class NumericalAbort : public Error {
 public:
  using Error::Error;
};

}  // namespace tattnet
