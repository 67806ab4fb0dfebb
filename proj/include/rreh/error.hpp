#pragma once

#include <stdexcept>

namespace rreh {

/// Base class of all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters, shapes, or data. CLI exit code 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Unsolvable or degenerate numerical systems. CLI exit code 3.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Filesystem failures. CLI exit code 4.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed FMAT/BCOD/RREH1 payloads; the message names the byte offset.
class FormatError : public IoError {
 public:
  using IoError::IoError;
};

}  // namespace rreh
