#pragma once

#include <stdexcept>
#include <string>

namespace lfr {

// Error categories surface as distinct CLI exit codes.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InsufficientFeaturesError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lfr
