#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hsx {

// Precondition violated by the caller (shape mismatch, out-of-range index).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A computation produced or received a non-finite value.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what, std::ptrdiff_t index = -1)
      : std::runtime_error(what), index_(index) {}

  // Offending sample / coordinate index, or -1 when not applicable.
  std::ptrdiff_t index() const noexcept { return index_; }

 private:
  std::ptrdiff_t index_;
};

// A proxy column collapsed to (near) zero norm.
class DegenerateProxyError : public NumericError {
 public:
  DegenerateProxyError(const std::string& what, std::ptrdiff_t column)
      : NumericError(what, column) {}
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed file contents, subclassed per failure so callers can tell them apart.
class FormatError : public IoError {
 public:
  using IoError::IoError;
};
class BadMagicError : public FormatError {
 public:
  using FormatError::FormatError;
};
class TruncatedFileError : public FormatError {
 public:
  using FormatError::FormatError;
};
class CountMismatchError : public FormatError {
 public:
  using FormatError::FormatError;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hsx
