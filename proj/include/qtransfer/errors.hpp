#pragma once

#include <stdexcept>
#include <string>

namespace qtransfer {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes or Hilbert spaces that do not fit together.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid physical input: non-normalized states, bad parameters, invalid regime.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Integrator gave up (norm or trace drift beyond tolerance).
class IntegrationError : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration; `key_path()` names the offending entry.
class ConfigError : public Error {
 public:
  ConfigError(std::string key_path, const std::string& what)
      : Error(key_path.empty() ? what : key_path + ": " + what), key_path_(std::move(key_path)) {}

  const std::string& key_path() const noexcept { return key_path_; }

 private:
  std::string key_path_;
};

}  // namespace qtransfer
