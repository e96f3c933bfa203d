#pragma once

#include <stdexcept>
#include <string>

namespace aeunmix {

// Base for every error this library raises on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

// A spectrum with zero norm cannot be compared by angle.
class DegenerateSpectrumError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class SeparationError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Input data is missing something the requested operation needs.
class DataError : public Error {
 public:
  using Error::Error;
};

class UnreachableThresholdError : public Error {
 public:
  using Error::Error;
};

}  // namespace aeunmix
