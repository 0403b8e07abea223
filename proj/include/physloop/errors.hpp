#pragma once

#include <stdexcept>

namespace physloop {

// Exit-code-mapped error categories (see cli.hpp): config 2, data 3, schema 4.

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace physloop
