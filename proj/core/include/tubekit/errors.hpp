#pragma once

#include <stdexcept>
#include <string>

namespace tubekit {

// Invalid or inconsistent configuration (bad value, unknown key, schema
// mismatch). The CLI maps this to its config-failure exit code.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A required input file or directory is absent or unreadable.
class MissingInputError : public std::runtime_error {
 public:
  explicit MissingInputError(const std::string& what) : std::runtime_error(what) {}
};

// A verifiable claim checked at runtime did not hold (e.g. an ordering
// assertion of a reproduction run).
class AssertionFailure : public std::runtime_error {
 public:
  explicit AssertionFailure(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace tubekit
