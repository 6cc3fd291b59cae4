#pragma once

#include <stdexcept>
#include <string>

namespace atlas {

// Malformed or inconsistent input data (documents, tables, records).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid invocation: unknown flags, missing required inputs, bad parameters.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Annotator could not produce an answer (transport exhausted, replay miss).
class AnnotatorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A single failed exchange with an annotator that is worth retrying.
class TransportError : public AnnotatorError {
 public:
  using AnnotatorError::AnnotatorError;
};

}  // namespace atlas
