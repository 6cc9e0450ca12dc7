#pragma once

#include <stdexcept>
#include <string>

namespace vidcap {

// Base of every error the library raises. The C API maps each subclass to a
// status code; anything else escaping the core is reported as internal.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input text (JSON-lines records, config documents).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Well-formed input that violates a data invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Bad user configuration or arguments: missing paths, bad flags.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Filesystem failures.
class IoError : public Error {
 public:
  using Error::Error;
};

// Non-finite values, divergence, undefined statistics.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace vidcap
