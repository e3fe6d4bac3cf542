#pragma once

#include <stdexcept>
#include <string>

namespace spline_koopman {

/// Precondition violated by a caller-supplied argument.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Evaluation parameter outside the valid domain (e.g. t outside [0, T]).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Shapes of two inputs disagree.
class DimensionMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Failures that come from the data or the numerics rather than the caller.
class NumericalError : public std::runtime_error {
 public:
  enum class Kind {
    kRankDeficient,
    kDegenerateData,
    kTooFewSnapshots,
    kNonfiniteState,
    kDivergence,
  };

  NumericalError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  [[nodiscard]] Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Malformed or invalid run configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace spline_koopman
