#pragma once

#include <stdexcept>
#include <string>

namespace graphite {

// Malformed or inconsistent input data (bad indices, non-binary features,
// unparseable files).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Invalid hyperparameters or shape mismatches detected before any compute.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A quantity that has no value for the given input (e.g. a mean over an
// empty edge set).
class UndefinedError : public std::runtime_error {
 public:
  explicit UndefinedError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace graphite
