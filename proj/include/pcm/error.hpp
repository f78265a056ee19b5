#pragma once

#include <stdexcept>
#include <string>

namespace pcm {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed file header or unparsable content.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Data that parses but violates a documented invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Synthetic generation could not satisfy its separation constraint.
class GenerationError : public Error {
 public:
  using Error::Error;
};

/// A training loop produced a non-finite objective.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

class StratificationError : public Error {
 public:
  using Error::Error;
};

/// Artifacts that were not produced for each other (d_c, d_f or config hash mismatch).
class CompatibilityError : public Error {
 public:
  using Error::Error;
};

}  // namespace pcm
