#pragma once

#include <stdexcept>
#include <string>

namespace chaoskit {

/// A configuration value breaks a model hypothesis or a type invariant.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A trajectory produced a non-finite coordinate.
class BlowUpError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace chaoskit
