#pragma once

#include <stdexcept>
#include <string>

namespace opinionforge {

/// Root of every error the library raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// No review survived parsing, cleaning and deduplication.
class EmptyCorpus : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

/// No admissible answer position exists after the separator.
class DecodeError : public Error {
 public:
  using Error::Error;
};

class PipelineError : public Error {
 public:
  using Error::Error;
};

class CondenseError : public Error {
 public:
  using Error::Error;
};

/// Transport failure or retry budget exhausted.
class BackendUnavailable : public Error {
 public:
  using Error::Error;
};

/// The backend answered, but the payload violates the wire schema. Never retried.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

}  // namespace opinionforge
