#pragma once

#include <stdexcept>
#include <string>

namespace mvfuse {

// Base class for every error thrown by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// File could not be opened, read or written.
struct IoError : Error {
  using Error::Error;
};

// Bad magic string, wrong version or truncated header/payload.
struct FormatError : Error {
  using Error::Error;
};

// Stored checksum does not match the payload.
struct ChecksumError : Error {
  using Error::Error;
};

// Structural invariant of a loaded or constructed object is violated.
struct ValidationError : Error {
  using Error::Error;
};

// Numerically degenerate input (collinear 6D columns, non-rotation matrix,
// nonpositive projective depth, ...).
struct DegenerateInputError : Error {
  using Error::Error;
};

// Non-finite value encountered while optimizing.
struct NumericError : Error {
  NumericError(const std::string& msg, int step_index, std::string term)
      : Error(msg), step(step_index), offending_term(std::move(term)) {}
  int step;
  std::string offending_term;
};

}  // namespace mvfuse
