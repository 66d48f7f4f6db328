#pragma once

#include <stdexcept>
#include <string>

namespace advbilevel {

// Shapes of the inputs disagree (q, m, n mismatches).
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed or insufficient input data (corpus rows, dumps, empty sets).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration value.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Normal-equations factorization failed even after damping retries.
class SingularError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace advbilevel
