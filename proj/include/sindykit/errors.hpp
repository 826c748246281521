#pragma once

#include <stdexcept>
#include <string>

namespace sindykit {

/// Root of every error the toolkit throws. The three direct families map onto
/// the CLI exit codes (config 2, data 3, numerical 4).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A column named in a schema is absent from the file, or a role is unknown.
class SchemaError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// An argument lies outside its documented domain (degree < 1, k < 2, ...).
class ParameterError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class DataError : public Error {
 public:
  using Error::Error;
};

/// Linear gap filling needs both endpoints of every column.
class EndpointError : public DataError {
 public:
  using DataError::DataError;
};

class ShapeError : public DataError {
 public:
  using DataError::DataError;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class ConditioningError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ScalingError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Integration left the divergence guard; `time()` is the first offending time.
class DivergenceError : public NumericalError {
 public:
  DivergenceError(const std::string& what, double time) : NumericalError(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

/// The adaptive integrator could not make progress (step size underflow or
/// step budget exhausted).
class StiffnessError : public NumericalError {
 public:
  StiffnessError(const std::string& what, double time) : NumericalError(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

class RefineError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace sindykit
