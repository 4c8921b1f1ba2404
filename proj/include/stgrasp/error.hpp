#pragma once

#include <stdexcept>
#include <string>

namespace stgrasp {

// Operand shapes do not fit the operation.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// API misuse, e.g. backward on a tensor that was never recorded.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Invalid call arguments (negative threshold, no modality selected, ...).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Invalid configuration values or config files. CLI exit code 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Missing or malformed dataset / checkpoint content. CLI exit code 3.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what, std::string sample_id = {})
      : std::runtime_error(sample_id.empty() ? what : "sample '" + sample_id + "': " + what),
        sample_id_(std::move(sample_id)) {}

  const std::string& sample_id() const noexcept { return sample_id_; }

 private:
  std::string sample_id_;
};

// NaN or Inf detected in a forward/backward pass. CLI exit code 4.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace stgrasp
