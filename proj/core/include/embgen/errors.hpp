#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace embgen {

/// Root of every error the pipeline throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One or more configuration constraints were violated. Carries every
/// violation, not only the first.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  std::vector<std::string> violations_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Transport-level failure talking to an LLM or encoder endpoint. `status()`
/// is the last HTTP status seen, or 0 when no response arrived at all.
class TransportError : public Error {
 public:
  TransportError(const std::string& what, int status, int attempts)
      : Error(what), status_(status), attempts_(attempts) {}
  int status() const noexcept { return status_; }
  int attempts() const noexcept { return attempts_; }

 private:
  int status_;
  int attempts_;
};

/// 401/403 from an endpoint. Never retried.
class AuthError : public TransportError {
 public:
  AuthError(const std::string& what, int status) : TransportError(what, status, 1) {}
};

/// Model output did not match the expected response schema.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// A QA pair references a proximity group the run does not know about.
class ProvenanceError : public Error {
 public:
  using Error::Error;
};

}  // namespace embgen
