#pragma once

#include <stdexcept>
#include <string>

namespace srlab {

// Base class for every error raised by the library. The CLI maps ConfigError
// to exit code 2 and everything else to exit code 3.
class LabError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Incompatible matrix / layer dimensions.
class ShapeError : public LabError {
 public:
  using LabError::LabError;
};

// Caller supplied an invalid argument (bad label, empty set, ...).
class InputError : public LabError {
 public:
  using LabError::LabError;
};

// Object used in a state it does not support (stale caches, wrong mode).
class StateError : public LabError {
 public:
  using LabError::LabError;
};

// Non-finite values or a degenerate numeric quantity.
class NumericError : public LabError {
 public:
  using LabError::LabError;
};

class ConfigError : public LabError {
 public:
  using LabError::LabError;
};

class ParseError : public LabError {
 public:
  using LabError::LabError;
};

// Target and shadow models violate the adaptive-attack contract.
class ContractError : public LabError {
 public:
  using LabError::LabError;
};

class IoError : public LabError {
 public:
  using LabError::LabError;
};

}  // namespace srlab
