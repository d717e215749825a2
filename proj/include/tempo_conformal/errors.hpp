#pragma once

#include <stdexcept>
#include <string>

namespace tempo_conformal {

// Error taxonomy mirrored by CLI exit codes: parse/validation -> 2,
// config -> 3, numeric -> 4.

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotFoundError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tempo_conformal
