#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sharplab {

/// Precondition violated by the caller (empty batch, m > batch size, ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed external data (bad IDX magic, inconsistent counts).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Missing or truncated file.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a training run produces a non-finite loss or parameter.
class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Config parse failure. Carries the offending key and line so the CLI can
/// point at it.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string where, std::string key, const std::string& message)
      : std::runtime_error(where + ": key '" + key + "': " + message),
        where_(std::move(where)),
        key_(std::move(key)) {}

  const std::string& where() const noexcept { return where_; }
  const std::string& key() const noexcept { return key_; }

 private:
  std::string where_;
  std::string key_;
};

}  // namespace sharplab
