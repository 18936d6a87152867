#pragma once

#include <stdexcept>
#include <string>

namespace infomorph {

// Error categories map 1:1 onto the CLI exit codes (config=1, data=2, numeric=3).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

class SchemaError : public DataError {
 public:
  explicit SchemaError(const std::string& msg) : DataError(msg) {}
};

}  // namespace infomorph
