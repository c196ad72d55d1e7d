#pragma once

#include <stdexcept>
#include <string>

namespace wiball {

/// Invalid argument or configuration value passed to a library call.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Input is well-formed but carries no usable signal (zero-energy CIR,
/// free-fall accelerometer window).
class DegenerateInputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Experiment or CLI configuration is missing fields or has bad values.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Trace file is malformed. record_index is the 0-based record that failed;
/// the message names it too.
class DataError : public std::runtime_error {
 public:
  DataError(const std::string& what, long long record_index = -1)
      : std::runtime_error(record_index >= 0 ? what + " at record " + std::to_string(record_index) : what),
        record_index_(record_index) {}
  long long record_index() const noexcept { return record_index_; }

 private:
  long long record_index_;
};

}  // namespace wiball
