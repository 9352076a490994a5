#pragma once

#include <stdexcept>

namespace v2vsim {

/// Invalid numeric parameter or unknown enumeration tag.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Unknown road, junction or car id.
class LookupError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// A routing policy has no road for a junction that a car actually reaches.
class PolicyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inconsistent scenario: bad OD pair, disconnected forced path, ...
class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration that cannot be run (e.g. dt too coarse for the backward sweep).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace v2vsim
