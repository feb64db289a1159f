#pragma once

#include <stdexcept>
#include <string>

namespace kernelflow {

/// Base for every error the library raises. `exit_code()` is what the CLI
/// returns when the error escapes a subcommand.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return 1; }
};

class InvalidInput : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& field_path, const std::string& what)
      : Error(field_path.empty() ? what : field_path + ": " + what), field_path_(field_path) {}
  const std::string& field_path() const noexcept { return field_path_; }
  int exit_code() const noexcept override { return 2; }

 private:
  std::string field_path_;
};

/// Numerical failures share exit code 3.
class NumericalError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

class SingularKernel : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class InstabilityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ResourceLimit : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

}  // namespace kernelflow
