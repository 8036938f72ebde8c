#pragma once

#include <stdexcept>
#include <string>

namespace skewcwm {

/// An argument lies outside the mathematical domain of a function.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Model parameters violate a structural invariant (shape, ordering, SPD).
class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A requested model configuration is not supported.
class UnsupportedModelError : public ModelError {
 public:
  using ModelError::ModelError;
};

/// Malformed user input: files, configuration, curve data.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A computation produced a non-finite or otherwise unusable value.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A cluster lost (almost) all of its members during estimation.
class EmptyClusterError : public NumericalError {
 public:
  EmptyClusterError(int cluster, double size)
      : NumericalError("cluster " + std::to_string(cluster + 1) + " collapsed (effective size " +
                       std::to_string(size) + ")"),
        cluster_(cluster) {}
  int cluster() const noexcept { return cluster_; }

 private:
  int cluster_;
};

/// Every start of a fit failed.
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace skewcwm
