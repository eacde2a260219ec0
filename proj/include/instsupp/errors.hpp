#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace instsupp {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input document; `offset` is the byte offset of the failure.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A transcript with no non-blank segment.
class EmptySession : public Error {
 public:
  using Error::Error;
};

class MissingLabel : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class UnderfullVocabulary : public Error {
 public:
  UnderfullVocabulary(const std::string& what, std::size_t available)
      : Error(what), available_(available) {}
  std::size_t available() const { return available_; }

 private:
  std::size_t available_;
};

/// The chat backend answered, but not in the shape the featurizer needs.
class BackendContract : public Error {
 public:
  using Error::Error;
};

/// A single transport-level failure (connection refused, HTTP 5xx, ...).
class TransportError : public Error {
 public:
  using Error::Error;
};

/// Transport failures persisted through every retry.
class RequestFailed : public Error {
 public:
  RequestFailed(const std::string& what, std::string session_id,
                std::size_t utterance_index, std::string indicator)
      : Error(what),
        session_id(std::move(session_id)),
        utterance_index(utterance_index),
        indicator(std::move(indicator)) {}

  std::string session_id;
  std::size_t utterance_index;
  std::string indicator;
};

/// Configuration problems; carries every violated field at once.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

}  // namespace instsupp
