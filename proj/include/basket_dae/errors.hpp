#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace basket_dae {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid hyperparameters, flags or option combinations (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent transaction input.
class IngestError : public Error {
 public:
  using Error::Error;
};

/// Mismatched vector/matrix shapes between collaborating objects.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A precondition on a basket (typically "at least one item") was violated.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Rejection sampling of all-zero corruptions ran out of attempts.
class CorruptionError : public Error {
 public:
  CorruptionError(const std::string& what, std::size_t attempts)
      : Error(what), attempts_(attempts) {}

  std::size_t attempts() const noexcept { return attempts_; }

 private:
  std::size_t attempts_;
};

/// Markov chain could not produce a valid (non-empty) state.
class ChainError : public Error {
 public:
  ChainError(const std::string& what, std::size_t step) : Error(what), step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// Non-finite gradient, loss or parameter encountered while training.
class NumericError : public Error {
 public:
  NumericError(const std::string& what, std::size_t step) : Error(what), step_(step) {}

  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// A rate whose denominator is zero was requested.
class UndefinedRateError : public Error {
 public:
  using Error::Error;
};

/// Model file could not be read back.
class ModelLoadError : public Error {
 public:
  enum class Kind { malformed, version_mismatch, dimension_mismatch };

  ModelLoadError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace basket_dae
