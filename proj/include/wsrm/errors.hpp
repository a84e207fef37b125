#pragma once

#include <stdexcept>
#include <string>

namespace wsrm {

/// Invalid user-supplied configuration. `field()` names the offending key.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Array dimensions that do not agree with each other.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Lookup of a variable handle that was never declared.
class MapError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// SPCA state that violates its invariants (e.g. a non-positive slope).
class StateError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InfeasibleAssignment : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

}  // namespace wsrm
