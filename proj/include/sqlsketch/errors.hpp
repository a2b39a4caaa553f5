#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sqlsketch {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A documented precondition was violated by the caller.
class InvalidArgumentError : public Error {
 public:
  using Error::Error;
};

class SchemaLoadError : public Error {
 public:
  using Error::Error;
};

class DatabaseAccessError : public Error {
 public:
  using Error::Error;
};

class IndexResolutionError : public Error {
 public:
  IndexResolutionError(std::string message, std::size_t position = 0)
      : Error(std::move(message)), position_(position) {}
  /// Byte offset of the offending token (0 when not applicable).
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

class SqlParseError : public Error {
 public:
  SqlParseError(const std::string& message, std::size_t position)
      : Error(message + " at offset " + std::to_string(position)), position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

class SchemaMismatchError : public Error {
 public:
  using Error::Error;
};

class PredicateNotFoundError : public Error {
 public:
  using Error::Error;
};

class EmptyCandidateError : public Error {
 public:
  using Error::Error;
};

class ScoreArityError : public Error {
 public:
  using Error::Error;
};

class EmptyValueError : public Error {
 public:
  using Error::Error;
};

class EmbeddingFormatError : public Error {
 public:
  using Error::Error;
};

/// Malformed or contract-violating response from a model endpoint.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

/// A single transport attempt failed (timeout, connection refused, 5xx).
class TransportError : public Error {
 public:
  using Error::Error;
};

/// Endpoint still failing after all retries.
class ProviderUnavailableError : public Error {
 public:
  using Error::Error;
};

class CompleterUnavailableError : public ProviderUnavailableError {
 public:
  using ProviderUnavailableError::ProviderUnavailableError;
};

class EncoderUnavailableError : public ProviderUnavailableError {
 public:
  using ProviderUnavailableError::ProviderUnavailableError;
};

class DatasetIntegrityError : public Error {
 public:
  DatasetIntegrityError(const std::string& message, std::vector<std::string> missing = {})
      : Error(message), missing_(std::move(missing)) {}
  const std::vector<std::string>& missing_ids() const noexcept { return missing_; }

 private:
  std::vector<std::string> missing_;
};

}  // namespace sqlsketch
