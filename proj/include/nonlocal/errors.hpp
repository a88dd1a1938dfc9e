#pragma once

#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace nonlocal {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  DimensionMismatch(std::size_t expected, std::size_t got)
      : Error("dimension mismatch: expected " + std::to_string(expected) + ", got " +
              std::to_string(got)),
        expected_(expected),
        got_(got) {}
  std::size_t expected() const noexcept { return expected_; }
  std::size_t got() const noexcept { return got_; }

 private:
  std::size_t expected_;
  std::size_t got_;
};

/// Raised when a point or argument falls outside the region an operation needs.
class DomainError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Quadrature grid would exceed the configured node budget.
class BudgetExceeded : public Error {
 public:
  BudgetExceeded(double requested, double budget)
      : Error("node budget exceeded: " + std::to_string(static_cast<long long>(requested)) +
              " nodes requested, budget " + std::to_string(static_cast<long long>(budget))),
        requested_(requested) {}
  double requested() const noexcept { return requested_; }

 private:
  double requested_;
};

/// Integrand or field produced NaN/Inf. Carries the offending location.
class NonFiniteValue : public Error {
 public:
  NonFiniteValue(const std::string& what, Eigen::VectorXd location)
      : Error(what + " at " + format(location)), location_(std::move(location)) {}
  const Eigen::VectorXd& location() const noexcept { return location_; }

  static std::string format(const Eigen::VectorXd& p) {
    std::string s = "(";
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      if (i) s += ", ";
      s += std::to_string(p[i]);
    }
    return s + ")";
  }

 private:
  Eigen::VectorXd location_;
};

class DivergenceError : public Error {
 public:
  using Error::Error;
};

class CoincidentPoints : public Error {
 public:
  CoincidentPoints() : Error("difference quotient undefined for coincident points x = y") {}
};

/// Bisection for a vanishing-gradient subset could not bracket a root.
class NoBracket : public Error {
 public:
  using Error::Error;
};

class SingularHessian : public Error {
 public:
  SingularHessian(std::size_t iteration, double condition)
      : Error("singular or near-singular Hessian at iteration " + std::to_string(iteration) +
              " (condition estimate " + std::to_string(condition) + ")"),
        iteration_(iteration),
        condition_(condition) {}
  std::size_t iteration() const noexcept { return iteration_; }
  double condition() const noexcept { return condition_; }

 private:
  std::size_t iteration_;
  double condition_;
};

class MissingDerivative : public Error {
 public:
  using Error::Error;
};

/// Rejection sampling gave up.
class SamplingFailure : public Error {
 public:
  using Error::Error;
};

/// An operator failed inside an optimizer; wraps the cause with the iteration index.
class IterationError : public Error {
 public:
  IterationError(std::size_t iteration, const std::string& cause)
      : Error("iteration " + std::to_string(iteration) + ": " + cause), iteration_(iteration) {}
  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

class IoError : public Error {
 public:
  IoError(const std::string& path, const std::string& what)
      : Error(what + ": " + path), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Configuration problem; `key()` names the offending entry.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what)
      : Error(what + " ('" + key + "')"), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace nonlocal
