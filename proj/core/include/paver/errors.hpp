#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace paver {

/// Invalid configuration, shape mismatch, or malformed input. CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A mathematical precondition failed (zero vector, constant map, ...).
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or truncated binary/text file.
class FormatError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Non-finite value encountered in a pipeline stage. CLI exit code 3.
class NumericError : public std::runtime_error {
 public:
  NumericError(std::string stage, const std::string& what);
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

/// NaN loss or gradient during optimization; carries the offending step.
class TrainingError : public NumericError {
 public:
  TrainingError(std::size_t step, const std::string& what);
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

}  // namespace paver
