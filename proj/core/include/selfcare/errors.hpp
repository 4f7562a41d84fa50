#pragma once

#include <stdexcept>
#include <string>

namespace selfcare {

// Base of every error the library throws. Callers that only need a message
// can catch this; the CLI maps the concrete types onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or missing on-disk structure (manifest, CSV, model container).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Payload contradicts the metadata describing it (byte length, duration).
class IntegrityError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration values or config file content.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Filter specification cannot be realised at the given sampling rate.
class DesignError : public Error {
 public:
  using Error::Error;
};

// Signal or record too short for the requested operation.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

class MissingModalityError : public Error {
 public:
  using Error::Error;
};

class InsufficientBeatsError : public Error {
 public:
  using Error::Error;
};

// Training labels contain fewer than two distinct classes.
class DegenerateLabelsError : public Error {
 public:
  using Error::Error;
};

// Non-finite values, shape or arity mismatches.
class DataError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace selfcare
