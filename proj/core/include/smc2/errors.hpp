#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace smc2 {

/// Bad numeric parameter passed to a model or kernel.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or unusable input data.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration rejected by validation (unknown keys, wrong types, ...).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operation requires a model capability that is missing.
class UnsupportedModelError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Slice journal does not describe a consistent particle history.
class JournalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Every particle weight is zero (log-weight -inf or NaN).
class DegenerateWeightsError : public std::runtime_error {
 public:
  DegenerateWeightsError(std::vector<double> theta, std::size_t t);

  const std::vector<double>& theta() const noexcept { return theta_; }
  std::size_t time() const noexcept { return t_; }

 private:
  std::vector<double> theta_;
  std::size_t t_;
};

/// Every island of the outer sampler has zero weight.
class SamplerDegeneracyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace smc2
